//! Daily aggregation of mentions and transaction words, market join, boolean features and
//! reactive/proactive classification of buy signals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::dates::{utc_day, DateRange};
use crate::horizon::Horizon;
use crate::lexer::{detect_tickers, KeywordMatcher, TickerLexicon, TransactionCounts};
use crate::market::PriceSeries;
use crate::scalar::Scalar;

/// Day-level investment advice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Signal {
    Buy,
    Sell,
    /// Equal buy and sell counts, including no activity.
    NoSignal,
}

impl Signal {
    pub fn label(self) -> &'static str {
        match self {
            Signal::Buy => "buy",
            Signal::Sell => "sell",
            Signal::NoSignal => "none",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "buy" => Some(Signal::Buy),
            "sell" => Some(Signal::Sell),
            "none" => Some(Signal::NoSignal),
            _ => None,
        }
    }
}

/// The larger of the buy and sell counts decides; ties give no signal.
pub fn derive_daily_signal(tx: &TransactionCounts) -> Signal {
    use std::cmp::Ordering::*;
    match tx.buy.cmp(&tx.sell) {
        Greater => Signal::Buy,
        Less => Signal::Sell,
        Equal => Signal::NoSignal,
    }
}

/// How a submission's transaction words are credited to the tickers it mentions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribution {
    /// Every ticker mentioned in the submission receives the full counts.
    #[default]
    AllMentioned,
    /// Only submissions mentioning exactly one distinct ticker contribute words.
    SoleTicker,
}

/// Whether repeated mentions within one submission count once or per occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MentionCounting {
    #[default]
    Occurrence,
    Submission,
}

#[derive(Debug, Clone, Default)]
pub struct AggregateOptions {
    pub attribution: Attribution,
    pub counting: MentionCounting,
    pub keywords: KeywordMatcher,
}

/// Activity of one ticker on one day.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Activity {
    pub mentions: u32,
    pub tx: TransactionCounts,
}

impl std::ops::AddAssign for Activity {
    fn add_assign(&mut self, o: Self) {
        self.mentions += o.mentions;
        self.tx += o.tx;
    }
}

/// Sparse per-(ticker, day) activity; absent cells are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityTable {
    pub range: DateRange,
    pub cells: BTreeMap<String, BTreeMap<NaiveDate, Activity>>,
}

impl ActivityTable {
    pub fn empty(range: DateRange) -> Self {
        Self {
            range,
            cells: BTreeMap::new(),
        }
    }

    pub fn get(&self, ticker: &str, day: NaiveDate) -> Activity {
        self.cells
            .get(ticker)
            .and_then(|m| m.get(&day))
            .copied()
            .unwrap_or_default()
    }

    /// Adds per-key sums of `other`; ranges are united.
    pub fn merge(&mut self, other: &ActivityTable) {
        self.range = DateRange {
            start: self.range.start.min(other.range.start),
            end: self.range.end.max(other.range.end),
        };
        for (ticker, days) in &other.cells {
            let mine = self.cells.entry(ticker.clone()).or_default();
            for (day, a) in days {
                *mine.entry(*day).or_default() += *a;
            }
        }
    }

    /// Total mentions per ticker over `window`.
    pub fn mention_totals(&self, window: &DateRange) -> BTreeMap<String, u64> {
        self.cells
            .iter()
            .map(|(t, days)| {
                let total = days
                    .range(window.start..=window.end)
                    .map(|(_, a)| a.mentions as u64)
                    .sum();
                (t.clone(), total)
            })
            .filter(|(_, total)| *total > 0)
            .collect()
    }

    /// Dense rows for `tickers`, one per day of the range.
    pub fn materialize<'a, I>(&self, tickers: I) -> DailyActivity
    where
        I: IntoIterator<Item = &'a str>,
    {
        let by_ticker = tickers
            .into_iter()
            .map(|t| {
                let row = self.range.days().map(|d| self.get(t, d)).collect();
                (t.to_string(), row)
            })
            .collect();
        DailyActivity {
            range: self.range,
            by_ticker,
        }
    }

    /// Sparse CSV: `ticker,date,mentions,buy,hold,sell,call,put`, first line `# range,<start>,<end>`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# range,{},{}", self.range.start, self.range.end)?;
        writeln!(w, "ticker,date,mentions,buy,hold,sell,call,put")?;
        for (t, days) in &self.cells {
            for (d, a) in days {
                writeln!(
                    w,
                    "{t},{d},{},{},{},{},{},{}",
                    a.mentions, a.tx.buy, a.tx.hold, a.tx.sell, a.tx.call, a.tx.put
                )?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(mut r: R) -> Result<Self, SignalError> {
        let mut text = String::new();
        r.read_to_string(&mut text)
            .map_err(|e| SignalError::Format(e.to_string()))?;
        let mut lines = text.lines();
        let bad = |m: &str| SignalError::Format(m.to_string());
        let head = lines.next().ok_or_else(|| bad("empty activity file"))?;
        let parts: Vec<&str> = head.trim_start_matches("# range,").split(',').collect();
        let parse_day = |s: &str| s.parse::<NaiveDate>().map_err(|_| bad("bad date"));
        let range = DateRange::new(
            parse_day(parts.first().copied().unwrap_or(""))?,
            parse_day(parts.get(1).copied().unwrap_or(""))?,
        )
        .map_err(|e| bad(&e.to_string()))?;
        lines.next();
        let mut table = ActivityTable::empty(range);
        for line in lines.filter(|l| !l.is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(bad(&format!("bad activity row `{line}`")));
            }
            let n = |i: usize| f[i].parse::<u32>().map_err(|_| bad(&format!("bad count in `{line}`")));
            let a = Activity {
                mentions: n(2)?,
                tx: TransactionCounts {
                    buy: n(3)?,
                    hold: n(4)?,
                    sell: n(5)?,
                    call: n(6)?,
                    put: n(7)?,
                },
            };
            table
                .cells
                .entry(f[0].to_string())
                .or_default()
                .insert(parse_day(f[1])?, a);
        }
        Ok(table)
    }
}

/// Dense activity for a fixed ticker set: `by_ticker[t][i]` is day `i` of `range`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DailyActivity {
    pub range: DateRange,
    pub by_ticker: BTreeMap<String, Vec<Activity>>,
}

impl DailyActivity {
    pub fn get(&self, ticker: &str, day: NaiveDate) -> Option<Activity> {
        if !self.range.contains(day) {
            return None;
        }
        let i = (day - self.range.start).num_days() as usize;
        self.by_ticker.get(ticker).map(|row| row[i])
    }
}

/// Per-(ticker, UTC day) mention and transaction-word counts for every detected ticker.
pub fn aggregate_activity(
    corpus: &Corpus,
    lexicon: &TickerLexicon,
    opts: &AggregateOptions,
) -> ActivityTable {
    let mut table = ActivityTable::empty(corpus.range);
    for s in &corpus.submissions {
        let text = s.full_text();
        let mentions = detect_tickers(&text, lexicon);
        if mentions.is_empty() {
            continue;
        }
        let mut per_ticker: BTreeMap<&str, u32> = BTreeMap::new();
        for m in &mentions {
            *per_ticker.entry(m.symbol.as_str()).or_insert(0) += 1;
        }
        let tx = opts.keywords.count(&text);
        let credit_words = match opts.attribution {
            Attribution::AllMentioned => true,
            Attribution::SoleTicker => per_ticker.len() == 1,
        };
        let day = utc_day(s.created_utc);
        for (ticker, count) in per_ticker {
            let cell = table
                .cells
                .entry(ticker.to_string())
                .or_default()
                .entry(day)
                .or_default();
            cell.mentions += match opts.counting {
                MentionCounting::Occurrence => count,
                MentionCounting::Submission => 1,
            };
            if credit_words {
                cell.tx += tx;
            }
        }
    }
    table
}

/// Dense daily activity for `tickers` over the corpus range.
pub fn aggregate_daily(
    corpus: &Corpus,
    lexicon: &TickerLexicon,
    tickers: &BTreeSet<String>,
    opts: &AggregateOptions,
) -> DailyActivity {
    aggregate_activity(corpus, lexicon, opts).materialize(tickers.iter().map(String::as_str))
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SignalError {
    #[error("no price series for ticker {0}")]
    MissingSeries(String),
    #[error("price series for {ticker} does not cover {} day(s): {}", .missing.len(), preview(.missing))]
    Coverage {
        ticker: String,
        missing: Vec<NaiveDate>,
    },
    #[error("summary format: {0}")]
    Format(String),
}

fn preview(days: &[NaiveDate]) -> String {
    let shown: Vec<String> = days.iter().take(5).map(ToString::to_string).collect();
    if days.len() > 5 {
        format!("{}, ...", shown.join(", "))
    } else {
        shown.join(", ")
    }
}

/// Activity joined with market data for one ticker and day.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySummary<T> {
    pub ticker: String,
    pub date: NaiveDate,
    pub mention_count: u32,
    pub tx: TransactionCounts,
    pub signal: Signal,
    pub is_trading_day: bool,
    pub close: T,
    pub volatility: T,
    pub volume: u64,
    pub change_before: [Option<T>; 3],
    pub change_after: [Option<T>; 5],
    pub ma_of_change: [Option<T>; 3],
}

impl<T: Scalar> DailySummary<T> {
    pub fn before(&self, x: Horizon) -> Option<T> {
        x.before_index().and_then(|i| self.change_before[i])
    }

    pub fn after(&self, y: Horizon) -> Option<T> {
        self.change_after[y.index()]
    }

    pub fn moving_average(&self, x: Horizon) -> Option<T> {
        x.before_index().and_then(|i| self.ma_of_change[i])
    }
}

/// Summaries per ticker, each list in date order.
pub type SummaryTable<T> = BTreeMap<String, Vec<DailySummary<T>>>;

/// One summary per (ticker, day of the activity range); every ticker needs a series covering it.
pub fn join_market<T: Scalar>(
    daily: &DailyActivity,
    series: &BTreeMap<String, PriceSeries<T>>,
) -> Result<SummaryTable<T>, SignalError> {
    let mut out = BTreeMap::new();
    for (ticker, row) in &daily.by_ticker {
        let s = series
            .get(ticker)
            .ok_or_else(|| SignalError::MissingSeries(ticker.clone()))?;
        let missing: Vec<NaiveDate> = daily
            .range
            .days()
            .filter(|d| s.index_of(*d).is_none())
            .collect();
        if !missing.is_empty() {
            return Err(SignalError::Coverage {
                ticker: ticker.clone(),
                missing,
            });
        }
        let summaries = daily
            .range
            .days()
            .zip(row)
            .map(|(day, a)| {
                let (bar, f) = s.day(day).expect("coverage checked");
                DailySummary {
                    ticker: ticker.clone(),
                    date: day,
                    mention_count: a.mentions,
                    tx: a.tx,
                    signal: derive_daily_signal(&a.tx),
                    is_trading_day: bar.is_trading_day,
                    close: bar.close,
                    volatility: f.rel_volatility,
                    volume: bar.volume,
                    change_before: f.change_before,
                    change_after: f.change_after,
                    ma_of_change: f.ma_of_change,
                }
            })
            .collect();
        out.insert(ticker.clone(), summaries);
    }
    Ok(out)
}

/// Boolean features of one summary for look-back `x` and look-ahead `y`.
/// `None` marks a flag whose price windows are undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Flags {
    pub price_up_before: Option<bool>,
    pub price_up_after: Option<bool>,
    /// Decline over the preceding `x` days followed by a rise over the next `x` days.
    pub dip: Option<bool>,
    pub buy_after_decline: Option<bool>,
    pub buy_accuracy: Option<bool>,
    pub sell_accuracy: Option<bool>,
}

pub fn derive_flags<T: Scalar>(s: &DailySummary<T>, x: Horizon, y: Horizon) -> Flags {
    let zero = T::zero();
    let before = s.before(x);
    let after_x = s.after(x);
    let after_y = s.after(y);
    Flags {
        price_up_before: before.map(|b| b > zero),
        price_up_after: after_y.map(|a| a > zero),
        dip: before.zip(after_x).map(|(b, a)| b < zero && a > zero),
        buy_after_decline: before.map(|b| s.signal == Signal::Buy && b < zero),
        buy_accuracy: after_y.map(|a| s.signal == Signal::Buy && a > zero),
        sell_accuracy: after_y.map(|a| s.signal == Signal::Sell && a < zero),
    }
}

/// Timing of a buy signal relative to the price move around it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalClass {
    /// The preceding change exceeds the following change.
    Reactive,
    /// The following change exceeds the preceding change.
    Proactive,
    Neutral,
}

impl fmt::Display for SignalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignalClass::Reactive => "reactive",
            SignalClass::Proactive => "proactive",
            SignalClass::Neutral => "neutral",
        })
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("only buy signals can be classified (got {0:?})")]
    NotBuy(Signal),
    #[error("price change over {0} is undefined")]
    Undefined(Horizon),
}

pub fn classify_buy_signal<T: Scalar>(
    s: &DailySummary<T>,
    x: Horizon,
) -> Result<SignalClass, ClassifyError> {
    if s.signal != Signal::Buy {
        return Err(ClassifyError::NotBuy(s.signal));
    }
    let before = s.before(x).ok_or(ClassifyError::Undefined(x))?;
    let after = s.after(x).ok_or(ClassifyError::Undefined(x))?;
    Ok(if before > after {
        SignalClass::Reactive
    } else if before < after {
        SignalClass::Proactive
    } else {
        SignalClass::Neutral
    })
}

const SUMMARY_BASE_COLUMNS: [&str; 24] = [
    "ticker",
    "date",
    "mentions",
    "buy",
    "hold",
    "sell",
    "call",
    "put",
    "signal",
    "trading_day",
    "close",
    "volatility",
    "volume",
    "chg_before_1d",
    "chg_before_3d",
    "chg_before_1w",
    "chg_after_1d",
    "chg_after_3d",
    "chg_after_1w",
    "chg_after_1m",
    "chg_after_3m",
    "ma_chg_1d",
    "ma_chg_3d",
    "ma_chg_1w",
];

/// Column order of the daily-summary export.
pub fn summary_columns() -> Vec<String> {
    let mut cols: Vec<String> = SUMMARY_BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    for x in Horizon::BEFORE {
        cols.push(format!("up_before_{x}"));
    }
    for y in Horizon::AFTER {
        cols.push(format!("up_after_{y}"));
    }
    for x in Horizon::BEFORE {
        cols.push(format!("dip_{x}"));
    }
    for x in Horizon::BEFORE {
        cols.push(format!("buy_after_decline_{x}"));
    }
    for y in Horizon::AFTER {
        cols.push(format!("buy_acc_{y}"));
    }
    for y in Horizon::AFTER {
        cols.push(format!("sell_acc_{y}"));
    }
    for x in Horizon::BEFORE {
        cols.push(format!("class_{x}"));
    }
    cols
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_else(|| "NA".into())
}

/// Writes summaries (all tickers, then dates) with derived flags. Values use round-trip formatting.
pub fn write_summaries_csv<T: Scalar, W: Write>(
    table: &SummaryTable<T>,
    w: W,
) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(summary_columns())?;
    for rows in table.values() {
        for s in rows {
            let mut rec: Vec<String> = vec![
                s.ticker.clone(),
                s.date.to_string(),
                s.mention_count.to_string(),
                s.tx.buy.to_string(),
                s.tx.hold.to_string(),
                s.tx.sell.to_string(),
                s.tx.call.to_string(),
                s.tx.put.to_string(),
                s.signal.label().into(),
                (s.is_trading_day as u8).to_string(),
                s.close.to_string(),
                s.volatility.to_string(),
                s.volume.to_string(),
            ];
            rec.extend(s.change_before.iter().map(|v| opt(*v)));
            rec.extend(s.change_after.iter().map(|v| opt(*v)));
            rec.extend(s.ma_of_change.iter().map(|v| opt(*v)));
            let flag = |b: Option<bool>| opt(b.map(|b| b as u8));
            for x in Horizon::BEFORE {
                rec.push(flag(derive_flags(s, x, x).price_up_before));
            }
            for y in Horizon::AFTER {
                rec.push(flag(derive_flags(s, Horizon::Day, y).price_up_after));
            }
            for x in Horizon::BEFORE {
                rec.push(flag(derive_flags(s, x, x).dip));
            }
            for x in Horizon::BEFORE {
                rec.push(flag(derive_flags(s, x, x).buy_after_decline));
            }
            for y in Horizon::AFTER {
                rec.push(flag(derive_flags(s, Horizon::Day, y).buy_accuracy));
            }
            for y in Horizon::AFTER {
                rec.push(flag(derive_flags(s, Horizon::Day, y).sell_accuracy));
            }
            for x in Horizon::BEFORE {
                rec.push(match classify_buy_signal(s, x) {
                    Ok(c) => c.to_string(),
                    Err(_) => "NA".into(),
                });
            }
            wtr.write_record(&rec)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a daily-summary export back; derived flag columns are ignored.
pub fn read_summaries_csv<T: Scalar, R: Read>(r: R) -> Result<SummaryTable<T>, SignalError> {
    let mut rdr = csv::Reader::from_reader(r);
    let fmt_err = |m: String| SignalError::Format(m);
    let headers = rdr.headers().map_err(|e| fmt_err(e.to_string()))?.clone();
    let expected = summary_columns();
    if headers.iter().collect::<Vec<_>>() != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(fmt_err("unexpected summary header".into()));
    }
    let mut table: SummaryTable<T> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| fmt_err(e.to_string()))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let f = |i: usize| rec.get(i).unwrap_or("");
        let bad = |what: &str| fmt_err(format!("line {line}: bad {what}"));
        let int = |i: usize| f(i).parse::<u32>().map_err(|_| bad(SUMMARY_BASE_COLUMNS[i]));
        let num = |i: usize| f(i).parse::<T>().map_err(|_| bad(SUMMARY_BASE_COLUMNS[i]));
        let maybe = |i: usize| -> Result<Option<T>, SignalError> {
            match f(i) {
                "NA" => Ok(None),
                v => v.parse::<T>().map(Some).map_err(|_| bad("change value")),
            }
        };
        let s = DailySummary {
            ticker: f(0).to_string(),
            date: f(1).parse().map_err(|_| bad("date"))?,
            mention_count: int(2)?,
            tx: TransactionCounts {
                buy: int(3)?,
                hold: int(4)?,
                sell: int(5)?,
                call: int(6)?,
                put: int(7)?,
            },
            signal: Signal::parse(f(8)).ok_or_else(|| bad("signal"))?,
            is_trading_day: f(9) == "1",
            close: num(10)?,
            volatility: num(11)?,
            volume: f(12).parse().map_err(|_| bad("volume"))?,
            change_before: [maybe(13)?, maybe(14)?, maybe(15)?],
            change_after: [maybe(16)?, maybe(17)?, maybe(18)?, maybe(19)?, maybe(20)?],
            ma_of_change: [maybe(21)?, maybe(22)?, maybe(23)?],
        };
        table.entry(s.ticker.clone()).or_default().push(s);
    }
    Ok(table)
}
