//! Daily price series: loading, calendar fill and derived window features.

use std::io::Read;
use std::path::Path;

use chrono::{Days, NaiveDate};

use crate::dates::DateRange;
use crate::horizon::{Horizon, WindowLengths};
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum MarketError {
    #[error("cannot read price file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("price file format: {0}")]
    Format(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("no trading bar on or before {}; uncovered days: {}", .dates.first().map(ToString::to_string).unwrap_or_default(), fmt_dates(.dates))]
    UncoveredPrefix { dates: Vec<NaiveDate> },
}

fn fmt_dates(dates: &[NaiveDate]) -> String {
    if dates.len() <= 6 {
        dates.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
    } else {
        format!("{} .. {} ({} days)", dates[0], dates[dates.len() - 1], dates.len())
    }
}

/// One exchange trading day as read from the source file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawBar<T> {
    pub date: NaiveDate,
    pub open: T,
    pub high: T,
    pub low: T,
    pub close: T,
    pub volume: u64,
}

/// One calendar day; non-trading days carry the previous close.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceBar<T> {
    pub date: NaiveDate,
    pub high: T,
    pub low: T,
    pub close: T,
    pub volume: u64,
    pub is_trading_day: bool,
}

/// `(high - low) / close`; zero on filled days.
pub fn relative_volatility<T: Scalar>(bar: &PriceBar<T>) -> T {
    (bar.high - bar.low) / bar.close
}

/// Percent change from `from` to `to`.
pub fn percent_change<T: Scalar>(from: T, to: T) -> T {
    T::hundred() * (to - from) / from
}

#[derive(serde::Deserialize)]
struct CsvRow {
    date: String,
    open: String,
    high: String,
    low: String,
    close: String,
    volume: String,
}

/// Parses a `date,open,high,low,close,volume` CSV with ascending ISO dates.
pub fn read_price_csv<T: Scalar, R: Read>(reader: R) -> Result<Vec<RawBar<T>>, MarketError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| MarketError::Format(e.to_string()))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    for col in ["date", "open", "high", "low", "close", "volume"] {
        if !headers.iter().any(|h| h == col) {
            return Err(MarketError::Format(format!("missing column `{col}`")));
        }
    }
    rdr.set_headers(csv::StringRecord::from(headers));

    let mut bars: Vec<RawBar<T>> = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| MarketError::Format(e.to_string()))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let err = |message: String| MarketError::Row { line, message };
        let rec: CsvRow = row.deserialize(None).map_err(|e| err(e.to_string()))?;
        let date = NaiveDate::parse_from_str(&rec.date, "%Y-%m-%d")
            .map_err(|e| err(format!("bad date `{}`: {e}", rec.date)))?;
        let num = |name: &str, v: &str| -> Result<T, MarketError> {
            let x: f64 = v
                .parse()
                .map_err(|_| err(format!("bad {name} `{v}`")))?;
            if !x.is_finite() {
                return Err(err(format!("non-finite {name}")));
            }
            Ok(T::of(x))
        };
        let open = num("open", &rec.open)?;
        let high = num("high", &rec.high)?;
        let low = num("low", &rec.low)?;
        let close = num("close", &rec.close)?;
        let volume: f64 = rec
            .volume
            .parse()
            .map_err(|_| err(format!("bad volume `{}`", rec.volume)))?;
        if close <= T::zero() {
            return Err(err(format!("close must be positive, got {close}")));
        }
        if low > high || low <= T::zero() {
            return Err(err(format!("inconsistent range low={low} high={high}")));
        }
        if volume < 0.0 || !volume.is_finite() {
            return Err(err(format!("negative volume {volume}")));
        }
        if let Some(prev) = bars.last() {
            if date <= prev.date {
                return Err(MarketError::Format(format!(
                    "dates not strictly ascending at line {line}: {date} after {}",
                    prev.date
                )));
            }
        }
        bars.push(RawBar {
            date,
            open,
            high,
            low,
            close,
            volume: volume.round() as u64,
        });
    }
    Ok(bars)
}

/// Loads the bars of one ticker from its CSV file.
pub fn load_price_series<T: Scalar>(path: &Path) -> Result<Vec<RawBar<T>>, MarketError> {
    let file = std::fs::File::open(path).map_err(|source| MarketError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_price_csv(file)
}

/// Materializes every day of `range`. Days without a trading bar repeat the last known close
/// as high, low and close with zero volume. Bars before `range.start` only seed the carry.
pub fn calendar_fill<T: Scalar>(
    raw: &[RawBar<T>],
    range: DateRange,
) -> Result<Vec<PriceBar<T>>, MarketError> {
    let mut out = Vec::with_capacity(range.num_days());
    let mut idx = 0;
    let mut last_close: Option<T> = None;
    let mut uncovered = Vec::new();
    for day in range.days() {
        while idx < raw.len() && raw[idx].date < day {
            last_close = Some(raw[idx].close);
            idx += 1;
        }
        if idx < raw.len() && raw[idx].date == day {
            let b = &raw[idx];
            out.push(PriceBar {
                date: day,
                high: b.high,
                low: b.low,
                close: b.close,
                volume: b.volume,
                is_trading_day: true,
            });
            last_close = Some(b.close);
            idx += 1;
        } else if let Some(c) = last_close {
            out.push(PriceBar {
                date: day,
                high: c,
                low: c,
                close: c,
                volume: 0,
                is_trading_day: false,
            });
        } else {
            uncovered.push(day);
        }
    }
    if !uncovered.is_empty() {
        return Err(MarketError::UncoveredPrefix { dates: uncovered });
    }
    Ok(out)
}

/// Derived per-day features. Windows that leave the series are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DayFeatures<T> {
    pub rel_volatility: T,
    /// Percent change versus 1d, 3d and 1w earlier.
    pub change_before: [Option<T>; 3],
    /// Percent change to 1d, 3d, 1w, 1m and 3m later.
    pub change_after: [Option<T>; 5],
    /// Mean of `change_before` over the preceding moving-average window (current day excluded).
    pub ma_of_change: [Option<T>; 3],
}

impl<T: Copy> DayFeatures<T> {
    pub fn before(&self, h: Horizon) -> Option<T> {
        h.before_index().and_then(|i| self.change_before[i])
    }

    pub fn after(&self, h: Horizon) -> Option<T> {
        self.change_after[h.index()]
    }

    pub fn moving_average(&self, h: Horizon) -> Option<T> {
        h.before_index().and_then(|i| self.ma_of_change[i])
    }
}

/// Calendar-contiguous bars for one ticker with their features.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries<T> {
    pub ticker: String,
    pub bars: Vec<PriceBar<T>>,
    pub features: Vec<DayFeatures<T>>,
    pub windows: WindowLengths,
}

impl<T: Scalar> PriceSeries<T> {
    /// Fills `raw` over `range` and computes all features.
    pub fn build(
        ticker: &str,
        raw: &[RawBar<T>],
        range: DateRange,
        windows: WindowLengths,
    ) -> Result<Self, MarketError> {
        let bars = calendar_fill(raw, range)?;
        Ok(Self::from_filled(ticker, bars, windows))
    }

    pub fn from_filled(ticker: &str, bars: Vec<PriceBar<T>>, windows: WindowLengths) -> Self {
        let features = compute_window_features(&bars, &windows);
        Self {
            ticker: ticker.to_string(),
            bars,
            features,
            windows,
        }
    }

    pub fn range(&self) -> Option<DateRange> {
        Some(DateRange {
            start: self.bars.first()?.date,
            end: self.bars.last()?.date,
        })
    }

    /// Position of `day` in the series.
    pub fn index_of(&self, day: NaiveDate) -> Option<usize> {
        let first = self.bars.first()?.date;
        let idx = usize::try_from((day - first).num_days()).ok()?;
        (idx < self.bars.len()).then_some(idx)
    }

    pub fn day(&self, day: NaiveDate) -> Option<(&PriceBar<T>, &DayFeatures<T>)> {
        let i = self.index_of(day)?;
        Some((&self.bars[i], &self.features[i]))
    }

    /// Every price multiplied by `k`; volumes untouched.
    pub fn scaled(&self, k: T) -> Self {
        let bars = self
            .bars
            .iter()
            .map(|b| PriceBar {
                high: b.high * k,
                low: b.low * k,
                close: b.close * k,
                ..*b
            })
            .collect();
        Self::from_filled(&self.ticker, bars, self.windows)
    }
}

/// Window features for a calendar-filled bar list.
pub fn compute_window_features<T: Scalar>(
    bars: &[PriceBar<T>],
    windows: &WindowLengths,
) -> Vec<DayFeatures<T>> {
    let n = bars.len();
    let mut features: Vec<DayFeatures<T>> = bars
        .iter()
        .map(|b| DayFeatures {
            rel_volatility: relative_volatility(b),
            ..Default::default()
        })
        .collect();
    for (t, f) in features.iter_mut().enumerate() {
        for h in Horizon::BEFORE {
            let d = windows.days(h) as usize;
            if t >= d {
                f.change_before[h.index()] = Some(percent_change(bars[t - d].close, bars[t].close));
            }
        }
        for h in Horizon::AFTER {
            let d = windows.days(h) as usize;
            if t + d < n {
                f.change_after[h.index()] = Some(percent_change(bars[t].close, bars[t + d].close));
            }
        }
    }
    let w = windows.moving_average as usize;
    let w_t = T::from_usize(w).expect("window fits scalar");
    for t in w..n {
        for h in Horizon::BEFORE {
            let i = h.index();
            let window: Option<Vec<T>> = (t - w..t).map(|s| features[s].change_before[i]).collect();
            features[t].ma_of_change[i] = window.map(|v| v.into_iter().sum::<T>() / w_t);
        }
    }
    features
}

/// Convenience: the day after `day`.
pub fn next_day(day: NaiveDate) -> NaiveDate {
    day + Days::new(1)
}
