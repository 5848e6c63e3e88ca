//! Rendering evaluation reports as CSV or aligned text tables.
//!
//! Undefined cells print as `NA`. Price changes and success rates are percentages with two
//! decimals; volatility is a percentage with one decimal; volume is abbreviated (`25.56M`).

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::backtest::{CohortStats, EvaluationReport};
use crate::horizon::Horizon;
use crate::scalar::Scalar;

pub const NA: &str = "NA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Text,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Text => "txt",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "text" | "txt" => Ok(Format::Text),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

/// A rectangular table of rendered cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(name: &str, header: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.to_string(),
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    /// Cell at `row` under the column named `column`.
    pub fn cell(&self, row: usize, column: &str) -> Option<&str> {
        let c = self.header.iter().position(|h| h == column)?;
        self.rows.get(row).map(|r| r[c].as_str())
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Text => self.to_text(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("cells are utf-8")
    }

    /// Left-aligned label columns, right-aligned values, two spaces between columns.
    pub fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|c| {
                std::iter::once(&self.header[c])
                    .chain(self.rows.iter().map(|r| &r[c]))
                    .map(|s| s.chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let labels = self.label_columns();
        let line = |cells: &[String]| {
            let mut out = String::new();
            for (c, cell) in cells.iter().enumerate() {
                if c > 0 {
                    out.push_str("  ");
                }
                if c < labels {
                    let _ = write!(out, "{cell:<w$}", w = widths[c]);
                } else {
                    let _ = write!(out, "{cell:>w$}", w = widths[c]);
                }
            }
            out.trim_end().to_string()
        };
        let mut out = line(&self.header);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }

    fn label_columns(&self) -> usize {
        self.header
            .iter()
            .take_while(|h| LABEL_COLUMNS.contains(&h.as_str()))
            .count()
    }
}

const LABEL_COLUMNS: &[&str] = &["section", "window", "t", "ticker", "pattern", "signals", "statistic"];

/// Two-decimal percent value, never `-0.00`.
pub fn fmt_pct<T: Scalar>(v: Option<T>) -> String {
    match v {
        Some(v) if v.is_finite() => {
            let s = format!("{:.2}", v.as_f64());
            if s == "-0.00" {
                "0.00".into()
            } else {
                s
            }
        }
        _ => NA.into(),
    }
}

/// Ratio as a two-decimal percent, e.g. 0.5175 → `51.75%`.
pub fn fmt_rate<T: Scalar>(v: Option<T>) -> String {
    match v {
        Some(v) => format!("{}%", fmt_pct(Some(v * T::hundred()))),
        None => NA.into(),
    }
}

/// Ratio as a one-decimal percent, e.g. 0.029 → `2.9%`.
pub fn fmt_volatility<T: Scalar>(v: Option<T>) -> String {
    match v {
        Some(v) if v.is_finite() => format!("{:.1}%", v.as_f64() * 100.0),
        _ => NA.into(),
    }
}

/// Volume with a K/M/B suffix and two decimals below one billion trillion.
pub fn fmt_volume<T: Scalar>(v: Option<T>) -> String {
    let Some(v) = v.map(Scalar::as_f64).filter(|v| v.is_finite()) else {
        return NA.into();
    };
    let (div, suffix) = match v.abs() {
        a if a >= 1e9 => (1e9, "B"),
        a if a >= 1e6 => (1e6, "M"),
        a if a >= 1e3 => (1e3, "K"),
        _ => return format!("{v:.0}"),
    };
    format!("{:.2}{suffix}", v / div)
}

pub fn fmt_mentions<T: Scalar>(v: Option<T>) -> String {
    fmt_pct(v)
}

/// One strategy's report: a row per look-ahead window.
pub fn render_report<T: Scalar>(report: &EvaluationReport<T>, format: Format) -> String {
    report_table(report).render(format)
}

pub const REPORT_HEADER: [&str; 9] = [
    "window",
    "n",
    "avg_change",
    "success_rate",
    "ticker_mean_change",
    "ticker_median_change",
    "ticker_mean_success",
    "ticker_median_success",
    "tickers",
];

pub fn report_table<T: Scalar>(report: &EvaluationReport<T>) -> Table {
    let mut t = Table::new(&report.label(), REPORT_HEADER);
    let a = &report.across_tickers;
    for y in Horizon::AFTER {
        let i = y.index();
        let tickers = report.per_ticker.values().filter(|c| c.after[i].n > 0).count();
        t.push_row(vec![
            y.label().to_string(),
            report.n(y).to_string(),
            fmt_pct(report.avg_change(y)),
            fmt_pct(report.success_rate(y).map(|r| r * T::hundred())),
            fmt_pct(a.mean_change[i]),
            fmt_pct(a.median_change[i]),
            fmt_pct(a.mean_success[i].map(|r| r * T::hundred())),
            fmt_pct(a.median_success[i].map(|r| r * T::hundred())),
            tickers.to_string(),
        ]);
    }
    t
}

pub const TICKER_REPORT_HEADER: [&str; 13] = [
    "ticker", "days", "n_1d", "chg_1d", "chg_3d", "chg_1w", "chg_1m", "chg_3m", "succ_1d",
    "succ_3d", "succ_1w", "succ_1m", "succ_3m",
];

/// Per-ticker breakdown of one strategy.
pub fn ticker_table<T: Scalar>(report: &EvaluationReport<T>) -> Table {
    let mut t = Table::new(&format!("{}_tickers", report.label()), TICKER_REPORT_HEADER);
    for (ticker, c) in &report.per_ticker {
        let mut row = vec![ticker.clone(), c.days.to_string(), c.after[0].n.to_string()];
        row.extend(c.after.iter().map(|w| fmt_pct(w.avg_change())));
        row.extend(c.after.iter().map(|w| fmt_pct(w.success_rate().map(|r| r * T::hundred()))));
        t.push_row(row);
    }
    t
}

/// The four look-ahead windows shown in the summary tables.
const SUMMARY_WINDOWS: [Horizon; 4] = [Horizon::Day, Horizon::Week, Horizon::Month, Horizon::Quarter];

const CHANGE_SECTION: &str = "Avg. price change (%) after";

fn change_rows<T: Scalar>(t: &mut Table, cohorts: &[Option<&CohortStats<T>>]) {
    for y in SUMMARY_WINDOWS {
        let mut row = vec![CHANGE_SECTION.to_string(), y.long_label().to_string()];
        row.extend(cohorts.iter().map(|c| fmt_pct(c.and_then(|c| c.window(y).avg_change()))));
        t.push_row(row);
    }
}

type CohortCell<'a, T> = &'a dyn Fn(&CohortStats<T>) -> String;

fn average_rows<T: Scalar>(t: &mut Table, cohorts: &[Option<&CohortStats<T>>], mentions: &[bool]) {
    let rows: [(&str, CohortCell<T>); 3] = [
        ("mentions", &|c| fmt_mentions(c.avg_mentions())),
        ("daily volat.", &|c| fmt_volatility(c.avg_volatility())),
        ("daily volume", &|c| fmt_volume(c.avg_volume())),
    ];
    for (k, (label, f)) in rows.iter().enumerate() {
        let mut row = vec!["Average".to_string(), label.to_string()];
        for (c, has_mentions) in cohorts.iter().zip(mentions) {
            row.push(match c {
                Some(_) if k == 0 && !has_mentions => NA.into(),
                Some(c) => f(c),
                None => NA.into(),
            });
        }
        t.push_row(row);
    }
}

pub const TABLE4_HEADER: [&str; 7] =
    ["section", "window", "benchmark", "All", "w/ Mention", "w/ Buy Sig.", "w/ Sell Sig."];

/// Price change per window plus day averages: benchmark and portfolio over all, mention,
/// buy-signal and sell-signal days. A missing benchmark renders as `NA`.
pub fn table4<T: Scalar>(
    benchmark: Option<&EvaluationReport<T>>,
    all: &EvaluationReport<T>,
    mention: &EvaluationReport<T>,
    buy: &EvaluationReport<T>,
    sell: &EvaluationReport<T>,
) -> Table {
    let mut t = Table::new("table4", TABLE4_HEADER);
    let cohorts = [
        benchmark.map(|b| &b.pooled),
        Some(&all.pooled),
        Some(&mention.pooled),
        Some(&buy.pooled),
        Some(&sell.pooled),
    ];
    change_rows(&mut t, &cohorts);
    average_rows(&mut t, &cohorts, &[false, true, true, true, true]);
    t
}

pub const TABLE5_HEADER: [&str; 6] = ["signals", "1 day", "3 days", "1 week", "1 month", "3 months"];

/// Success rates, averaged over tickers, of buy signals against the three baselines.
pub fn table5<T: Scalar>(
    buy: &EvaluationReport<T>,
    equal: &EvaluationReport<T>,
    random: &EvaluationReport<T>,
    every: &EvaluationReport<T>,
) -> Table {
    let mut t = Table::new("table5", TABLE5_HEADER);
    for (label, r) in [
        ("buy signals", buy),
        ("equally distr.", equal),
        ("randomly distr.", random),
        ("every day", every),
    ] {
        let mut row = vec![label.to_string()];
        row.extend(Horizon::AFTER.iter().map(|y| fmt_rate(r.across_tickers.mean_success[y.index()])));
        t.push_row(row);
    }
    t
}

pub const TABLE6_HEADER: [&str; 8] = [
    "section",
    "window",
    "Total Avg.",
    "Mention",
    "Buy Sig.",
    "Sell Sig.",
    "Eq. Distr.",
    "Rnd. Distr.",
];

/// Price change per window for every investment pattern.
pub fn table6<T: Scalar>(
    all: &EvaluationReport<T>,
    mention: &EvaluationReport<T>,
    buy: &EvaluationReport<T>,
    sell: &EvaluationReport<T>,
    equal: &EvaluationReport<T>,
    random: &EvaluationReport<T>,
) -> Table {
    let mut t = Table::new("table6", TABLE6_HEADER);
    let cohorts = [all, mention, buy, sell, equal, random].map(|r| Some(&r.pooled));
    change_rows(&mut t, &cohorts);
    t
}

pub const TABLE7_HEADER: [&str; 6] = ["ticker", "pattern", "1 day", "1 week", "1 month", "3 months"];

/// Per-ticker average change over all days against buy-signal days.
pub fn table7<T: Scalar>(all: &EvaluationReport<T>, buy: &EvaluationReport<T>) -> Table {
    let mut t = Table::new("table7", TABLE7_HEADER);
    for (ticker, avg) in &all.per_ticker {
        for (pattern, c) in [("Average", Some(avg)), ("Buy Signal", buy.per_ticker.get(ticker))] {
            let mut row = vec![ticker.clone(), pattern.to_string()];
            row.extend(
                SUMMARY_WINDOWS
                    .iter()
                    .map(|&y| fmt_pct(c.and_then(|c| c.window(y).avg_change()))),
            );
            t.push_row(row);
        }
    }
    t
}

pub const TABLE8_HEADER: [&str; 10] = [
    "section",
    "t",
    "Avg",
    "Buy Sig.",
    "Reactive x=1d",
    "Reactive x=3d",
    "Reactive x=1w",
    "Proactive x=1d",
    "Proactive x=3d",
    "Proactive x=1w",
];

const SINCE_SECTION: &str = "AVG perf (%) since";
const AFTER_SECTION: &str = "AVG perf (%) after";

/// Longest look-back first, as printed.
const SINCE_ORDER: [Horizon; 3] = [Horizon::Week, Horizon::ThreeDays, Horizon::Day];

fn since_after_rows<T: Scalar>(t: &mut Table, cohorts: &[&CohortStats<T>], since: &str, after: &str) {
    for x in SINCE_ORDER {
        let mut row = vec![since.to_string(), x.label().to_string()];
        row.extend(
            cohorts
                .iter()
                .map(|c| fmt_pct(c.before_window(x).and_then(|w| w.avg_change()))),
        );
        t.push_row(row);
    }
    for y in Horizon::AFTER {
        let mut row = vec![after.to_string(), y.label().to_string()];
        row.extend(cohorts.iter().map(|c| fmt_pct(c.window(y).avg_change())));
        t.push_row(row);
    }
}

/// Look-back and look-ahead change of reactive and proactive buy signals against the
/// all-days and all-buy-signal baselines. `reactive` and `proactive` are ordered 1d, 3d, 1w.
pub fn table8<T: Scalar>(
    all: &EvaluationReport<T>,
    buy: &EvaluationReport<T>,
    reactive: [&EvaluationReport<T>; 3],
    proactive: [&EvaluationReport<T>; 3],
) -> Table {
    let mut t = Table::new("table8", TABLE8_HEADER);
    let mut cohorts = vec![&all.pooled, &buy.pooled];
    cohorts.extend(reactive.iter().map(|r| &r.pooled));
    cohorts.extend(proactive.iter().map(|r| &r.pooled));
    since_after_rows(&mut t, &cohorts, SINCE_SECTION, AFTER_SECTION);
    t
}

/// Column headers of the two-period comparison, given the period labels.
pub fn table9_header(full: &str, pre: &str) -> Vec<String> {
    let mut h = vec!["section".to_string(), "window".to_string()];
    for period in [full, pre] {
        h.push(format!("{period} All"));
        h.push(format!("{period} w/ Buy Sig."));
    }
    h
}

/// Table 4 style rows for all days and buy-signal days, full period against an earlier one.
pub fn table9<T: Scalar>(
    full_label: &str,
    full: (&EvaluationReport<T>, &EvaluationReport<T>),
    pre_label: &str,
    pre: (&EvaluationReport<T>, &EvaluationReport<T>),
) -> Table {
    let mut t = Table::new("table9", table9_header(full_label, pre_label));
    let cohorts = [full.0, full.1, pre.0, pre.1].map(|r| Some(&r.pooled));
    change_rows(&mut t, &cohorts);
    average_rows(&mut t, &cohorts, &[true; 4]);
    t
}

/// Reports feeding one period of the reactive/proactive comparison.
#[derive(Debug, Clone, Copy)]
pub struct PhaseSignals<'a, T> {
    pub buy: &'a EvaluationReport<T>,
    /// Ordered x = 1d, 1w.
    pub reactive: [&'a EvaluationReport<T>; 2],
    pub proactive: [&'a EvaluationReport<T>; 2],
}

impl<'a, T> PhaseSignals<'a, T> {
    fn cohorts(&self) -> [&'a CohortStats<T>; 5] {
        [
            &self.buy.pooled,
            &self.reactive[0].pooled,
            &self.reactive[1].pooled,
            &self.proactive[0].pooled,
            &self.proactive[1].pooled,
        ]
    }
}

pub fn table10_header(full: &str, pre: &str) -> Vec<String> {
    let mut h = vec!["section".to_string(), "t".to_string()];
    for period in [full, pre] {
        for col in [
            "All Buy",
            "React. Buy x=1d",
            "React. Buy x=1w",
            "Proact. Buy x=1d",
            "Proact. Buy x=1w",
        ] {
            h.push(format!("{period} {col}"));
        }
    }
    h
}

/// Look-back and look-ahead change of all, reactive and proactive buy signals, full period
/// against an earlier one.
pub fn table10<T: Scalar>(
    full_label: &str,
    full: PhaseSignals<'_, T>,
    pre_label: &str,
    pre: PhaseSignals<'_, T>,
) -> Table {
    let mut t = Table::new("table10", table10_header(full_label, pre_label));
    let mut cohorts = full.cohorts().to_vec();
    cohorts.extend(pre.cohorts());
    since_after_rows(&mut t, &cohorts, "% chg. since", "% chg. after");
    t
}
