//! Strategy evaluation over daily summaries.
//!
//! A strategy selects (ticker, day) observations; the report averages the look-ahead price
//! changes of the selection per window and counts how often they were strictly positive.
//! Observations whose window leaves the price data are dropped from that window only.

mod baselines;
mod portfolio;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use baselines::{equally_distributed_days, random_days, BaselineError};
pub use portfolio::{
    intersect_rankings, rank_top_k, sector_distribution, select_portfolio, PortfolioSelection,
    UNKNOWN_SECTOR,
};

use crate::dates::{is_weekend, DateRange};
use crate::horizon::Horizon;
use crate::scalar::{mean, median, Scalar};
use crate::signals::{classify_buy_signal, DailySummary, Signal, SignalClass, SummaryTable};

/// Which signal count sizes a baseline sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalSide {
    #[default]
    Buy,
    Sell,
}

impl SignalSide {
    fn signal(self) -> Signal {
        match self {
            SignalSide::Buy => Signal::Buy,
            SignalSide::Sell => Signal::Sell,
        }
    }
}

/// Moving-average filter mode for buy signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaMode {
    /// At least one look-back change below its moving average.
    AnyBelowMa,
    /// All three look-back changes below their moving averages.
    AllBelowMa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyKind {
    AllDays,
    MentionDays,
    BuySignalDays,
    SellSignalDays,
    EquallyDistributed {
        #[serde(default)]
        reference: SignalSide,
    },
    RandomlyDistributed {
        #[serde(default)]
        reference: SignalSide,
        seed: u64,
        #[serde(default = "default_trials")]
        trials: u32,
    },
    ReactiveBuy {
        x: Horizon,
    },
    ProactiveBuy {
        x: Horizon,
    },
    MaFilteredBuy {
        mode: MaMode,
    },
}

fn default_trials() -> u32 {
    5
}

impl StrategyKind {
    /// Short stable name, used for report file names.
    pub fn label(&self) -> String {
        let side = |s: &SignalSide| match s {
            SignalSide::Buy => "",
            SignalSide::Sell => "_sell",
        };
        match self {
            StrategyKind::AllDays => "all_days".into(),
            StrategyKind::MentionDays => "mention_days".into(),
            StrategyKind::BuySignalDays => "buy_signal".into(),
            StrategyKind::SellSignalDays => "sell_signal".into(),
            StrategyKind::EquallyDistributed { reference } => {
                format!("equally_distributed{}", side(reference))
            }
            StrategyKind::RandomlyDistributed { reference, .. } => {
                format!("randomly_distributed{}", side(reference))
            }
            StrategyKind::ReactiveBuy { x } => format!("reactive_buy_{x}"),
            StrategyKind::ProactiveBuy { x } => format!("proactive_buy_{x}"),
            StrategyKind::MaFilteredBuy { mode: MaMode::AnyBelowMa } => "ma_filtered_any".into(),
            StrategyKind::MaFilteredBuy { mode: MaMode::AllBelowMa } => "ma_filtered_all".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    #[serde(flatten)]
    pub kind: StrategyKind,
    /// Restricts selection to these days; `None` uses every summary.
    #[serde(default)]
    pub date_range: Option<DateRange>,
    /// Drop non-trading days from the selection.
    #[serde(default)]
    pub trading_days_only: bool,
}

impl StrategySpec {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            date_range: None,
            trading_days_only: false,
        }
    }

    pub fn in_range(mut self, range: DateRange) -> Self {
        self.date_range = Some(range);
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        match self.kind {
            StrategyKind::RandomlyDistributed { trials: 0, .. } => {
                Err("randomly_distributed needs trials >= 1".into())
            }
            StrategyKind::ReactiveBuy { x } | StrategyKind::ProactiveBuy { x }
                if x.before_index().is_none() =>
            {
                Err(format!("look-back window must be 1d, 3d or 1w, got {x}"))
            }
            _ => Ok(()),
        }
    }

    /// Every kind, all three look-backs, both filter modes.
    pub fn standard_set(seed: u64, trials: u32) -> Vec<StrategySpec> {
        let mut kinds = vec![
            StrategyKind::AllDays,
            StrategyKind::MentionDays,
            StrategyKind::BuySignalDays,
            StrategyKind::SellSignalDays,
            StrategyKind::EquallyDistributed {
                reference: SignalSide::Buy,
            },
            StrategyKind::RandomlyDistributed {
                reference: SignalSide::Buy,
                seed,
                trials,
            },
        ];
        for x in Horizon::BEFORE {
            kinds.push(StrategyKind::ReactiveBuy { x });
        }
        for x in Horizon::BEFORE {
            kinds.push(StrategyKind::ProactiveBuy { x });
        }
        kinds.push(StrategyKind::MaFilteredBuy {
            mode: MaMode::AnyBelowMa,
        });
        kinds.push(StrategyKind::MaFilteredBuy {
            mode: MaMode::AllBelowMa,
        });
        kinds.into_iter().map(StrategySpec::new).collect()
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.kind.label())?;
        if let Some(r) = self.date_range {
            write!(f, " [{r}]")?;
        }
        Ok(())
    }
}

/// Sum, count and positive count of one window over a selection.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WindowStats<T> {
    pub n: u64,
    pub positives: u64,
    pub sum: T,
}

impl<T: Scalar> WindowStats<T> {
    fn push(&mut self, v: T) {
        self.n += 1;
        self.sum = self.sum + v;
        if v > T::zero() {
            self.positives += 1;
        }
    }

    fn merge(&mut self, o: &Self) {
        self.n += o.n;
        self.positives += o.positives;
        self.sum = self.sum + o.sum;
    }

    /// Mean change in percent; `None` when nothing was observed.
    pub fn avg_change(&self) -> Option<T> {
        (self.n > 0).then(|| self.sum / T::of(self.n as f64))
    }

    /// Share of strictly positive changes; `None` when nothing was observed.
    pub fn success_rate(&self) -> Option<T> {
        (self.n > 0).then(|| T::of(self.positives as f64) / T::of(self.n as f64))
    }
}

/// Aggregates of one selection of days.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CohortStats<T> {
    /// Look-ahead windows, indexed like [`Horizon::AFTER`].
    pub after: [WindowStats<T>; 5],
    /// Look-back windows, indexed like [`Horizon::BEFORE`].
    pub before: [WindowStats<T>; 3],
    pub days: u64,
    pub mention_sum: u64,
    pub volatility_sum: T,
    pub volume_sum: u128,
}

impl<T: Scalar> CohortStats<T> {
    fn push(&mut self, s: &DailySummary<T>) {
        self.days += 1;
        self.mention_sum += s.mention_count as u64;
        self.volatility_sum = self.volatility_sum + s.volatility;
        self.volume_sum += s.volume as u128;
        for (w, v) in self.after.iter_mut().zip(s.change_after) {
            if let Some(v) = v {
                w.push(v);
            }
        }
        for (w, v) in self.before.iter_mut().zip(s.change_before) {
            if let Some(v) = v {
                w.push(v);
            }
        }
    }

    fn merge(&mut self, o: &Self) {
        for (a, b) in self.after.iter_mut().zip(&o.after) {
            a.merge(b);
        }
        for (a, b) in self.before.iter_mut().zip(&o.before) {
            a.merge(b);
        }
        self.days += o.days;
        self.mention_sum += o.mention_sum;
        self.volatility_sum = self.volatility_sum + o.volatility_sum;
        self.volume_sum += o.volume_sum;
    }

    pub fn window(&self, y: Horizon) -> &WindowStats<T> {
        &self.after[y.index()]
    }

    pub fn before_window(&self, x: Horizon) -> Option<&WindowStats<T>> {
        x.before_index().map(|i| &self.before[i])
    }

    pub fn avg_mentions(&self) -> Option<T> {
        (self.days > 0).then(|| T::of(self.mention_sum as f64) / T::of(self.days as f64))
    }

    pub fn avg_volatility(&self) -> Option<T> {
        (self.days > 0).then(|| self.volatility_sum / T::of(self.days as f64))
    }

    pub fn avg_volume(&self) -> Option<T> {
        (self.days > 0).then(|| T::of(self.volume_sum as f64 / self.days as f64))
    }
}

/// Mean and median across tickers of the per-ticker window figures.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AcrossTickers<T> {
    pub mean_change: [Option<T>; 5],
    pub median_change: [Option<T>; 5],
    pub mean_success: [Option<T>; 5],
    pub median_success: [Option<T>; 5],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport<T> {
    pub spec: StrategySpec,
    /// Every selected observation of every ticker (random trials pooled).
    pub pooled: CohortStats<T>,
    pub per_ticker: BTreeMap<String, CohortStats<T>>,
    /// Tickers with no defined observation in a window are left out of that window.
    pub across_tickers: AcrossTickers<T>,
}

impl<T: Scalar> EvaluationReport<T> {
    pub fn label(&self) -> String {
        self.spec.kind.label()
    }

    pub fn avg_change(&self, y: Horizon) -> Option<T> {
        self.pooled.window(y).avg_change()
    }

    pub fn success_rate(&self, y: Horizon) -> Option<T> {
        self.pooled.window(y).success_rate()
    }

    pub fn n(&self, y: Horizon) -> u64 {
        self.pooled.window(y).n
    }

    pub fn avg_before(&self, x: Horizon) -> Option<T> {
        self.pooled.before_window(x).and_then(WindowStats::avg_change)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BacktestError {
    #[error("invalid strategy: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

/// Keeps summaries whose date lies in `range`; their price windows stay as computed.
pub fn restrict_range<T: Scalar>(table: &SummaryTable<T>, range: &DateRange) -> SummaryTable<T> {
    table
        .iter()
        .map(|(t, rows)| {
            let kept = rows.iter().filter(|s| range.contains(s.date)).cloned().collect();
            (t.clone(), kept)
        })
        .collect()
}

fn below_ma<T: Scalar>(s: &DailySummary<T>, x: Horizon) -> Option<bool> {
    Some(s.before(x)? < s.moving_average(x)?)
}

fn passes_ma<T: Scalar>(s: &DailySummary<T>, mode: MaMode) -> bool {
    if s.signal != Signal::Buy {
        return false;
    }
    let checks: Option<Vec<bool>> = Horizon::BEFORE.iter().map(|&x| below_ma(s, x)).collect();
    match (checks, mode) {
        (None, _) => false,
        (Some(c), MaMode::AnyBelowMa) => c.iter().any(|&b| b),
        (Some(c), MaMode::AllBelowMa) => c.iter().all(|&b| b),
    }
}

/// Buy days passing the moving-average filter; days with an undefined moving average are dropped.
pub fn ma_filter<T: Scalar>(rows: &[DailySummary<T>], mode: MaMode) -> Vec<&DailySummary<T>> {
    rows.iter().filter(|s| passes_ma(s, mode)).collect()
}

/// 64-bit FNV-1a.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Seed for a ticker's random baseline: the strategy seed mixed with the symbol.
pub fn ticker_seed(seed: u64, ticker: &str) -> u64 {
    seed ^ fnv1a(ticker)
}

/// Selected rows of one ticker; random baselines yield one selection per trial.
pub fn select_days<'a, T: Scalar>(
    rows: &'a [DailySummary<T>],
    ticker: &str,
    spec: &StrategySpec,
) -> Result<Vec<Vec<&'a DailySummary<T>>>, BacktestError> {
    let rows: Vec<&DailySummary<T>> = rows
        .iter()
        .filter(|s| spec.date_range.is_none_or(|r| r.contains(s.date)))
        .collect();
    let keep = |s: &DailySummary<T>| !spec.trading_days_only || s.is_trading_day;
    let pick = |f: &dyn Fn(&DailySummary<T>) -> bool| -> Vec<&'a DailySummary<T>> {
        rows.iter().copied().filter(|s| keep(s) && f(s)).collect()
    };
    let signal_count = |side: SignalSide| rows.iter().filter(|s| keep(s) && s.signal == side.signal()).count();
    let by_index = |idx: Vec<usize>| -> Vec<&'a DailySummary<T>> {
        idx.into_iter().map(|i| rows[i - 1]).filter(|s| keep(s)).collect()
    };
    Ok(match spec.kind {
        StrategyKind::AllDays => vec![pick(&|_| true)],
        StrategyKind::MentionDays => vec![pick(&|s| s.mention_count > 0)],
        StrategyKind::BuySignalDays => vec![pick(&|s| s.signal == Signal::Buy)],
        StrategyKind::SellSignalDays => vec![pick(&|s| s.signal == Signal::Sell)],
        StrategyKind::ReactiveBuy { x } => {
            vec![pick(&|s| classify_buy_signal(s, x) == Ok(SignalClass::Reactive))]
        }
        StrategyKind::ProactiveBuy { x } => {
            vec![pick(&|s| classify_buy_signal(s, x) == Ok(SignalClass::Proactive))]
        }
        StrategyKind::MaFilteredBuy { mode } => vec![pick(&|s| passes_ma(s, mode))],
        StrategyKind::EquallyDistributed { reference } => {
            let n = signal_count(reference);
            let idx = equally_distributed_days(rows.len(), n, |i| is_weekend(rows[i - 1].date))?;
            vec![by_index(idx)]
        }
        StrategyKind::RandomlyDistributed {
            reference,
            seed,
            trials,
        } => {
            let n = signal_count(reference);
            random_days(rows.len(), n, ticker_seed(seed, ticker), trials)?
                .into_iter()
                .map(by_index)
                .collect()
        }
    })
}

/// Evaluates one strategy over every ticker of `table`.
pub fn evaluate_strategy<T: Scalar>(
    table: &SummaryTable<T>,
    spec: &StrategySpec,
) -> Result<EvaluationReport<T>, BacktestError> {
    spec.validate().map_err(BacktestError::InvalidSpec)?;
    let mut pooled = CohortStats::default();
    let mut per_ticker = BTreeMap::new();
    for (ticker, rows) in table {
        let mut cohort = CohortStats::default();
        for selection in select_days(rows, ticker, spec)? {
            for s in selection {
                cohort.push(s);
            }
        }
        pooled.merge(&cohort);
        per_ticker.insert(ticker.clone(), cohort);
    }
    let across_tickers = across(&per_ticker);
    Ok(EvaluationReport {
        spec: spec.clone(),
        pooled,
        per_ticker,
        across_tickers,
    })
}

fn across<T: Scalar>(per_ticker: &BTreeMap<String, CohortStats<T>>) -> AcrossTickers<T> {
    let mut out = AcrossTickers::default();
    for i in 0..5 {
        let changes: Vec<T> = per_ticker.values().filter_map(|c| c.after[i].avg_change()).collect();
        let rates: Vec<T> = per_ticker.values().filter_map(|c| c.after[i].success_rate()).collect();
        out.mean_change[i] = mean(&changes);
        out.median_change[i] = median(&changes);
        out.mean_success[i] = mean(&rates);
        out.median_success[i] = median(&rates);
    }
    out
}

/// Evaluates several strategies.
pub fn evaluate_all<T: Scalar>(
    table: &SummaryTable<T>,
    specs: &[StrategySpec],
) -> Result<Vec<EvaluationReport<T>>, BacktestError> {
    specs.iter().map(|s| evaluate_strategy(table, s)).collect()
}
