//! Naive recomputation of every evaluation figure straight from the raw synthetic inputs.
//!
//! Nothing here calls the library's lexer, market, signal or backtest code: prices are looked
//! up by scanning the raw bars, tokens are re-split by hand, and selections are re-derived
//! day by day. Shared by the oracle and acceptance test targets.
#![allow(dead_code, clippy::manual_checked_ops, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wsbtrace::EvaluationReport;
use wsbtrace::backtest::{MaMode, SignalSide, StrategyKind, StrategySpec};
use wsbtrace::corpus::SelfText;
use wsbtrace::synthetic::SyntheticData;
use wsbtrace::{DateRange, Horizon};

pub const WINDOW_DAYS: [u64; 5] = [1, 3, 7, 30, 90];
pub const MA_DAYS: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sig {
    Buy,
    Sell,
    None,
}

#[derive(Debug, Clone)]
pub struct Day {
    pub date: NaiveDate,
    pub mentions: u64,
    pub buy: u64,
    pub sell: u64,
    pub signal: Sig,
    pub trading: bool,
    pub volatility: f64,
    pub volume: u64,
    pub before: [Option<f64>; 3],
    pub after: [Option<f64>; 5],
    pub ma: [Option<f64>; 3],
}

fn strip(tok: &str) -> &str {
    let p = |c: char| ".,;:!?()[]{}\"'".contains(c);
    tok.trim_matches(p)
}

fn upper(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_uppercase())
}

/// Ticker symbols in `text`, one entry per occurrence.
pub fn naive_tickers(text: &str, known: &BTreeSet<String>, stop: &BTreeSet<String>) -> Vec<String> {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        let t = strip(raw);
        if let Some(rest) = t.strip_prefix('$') {
            if !rest.is_empty() && rest.len() <= 5 && upper(rest) {
                out.push(rest.to_string());
            }
        } else if t.len() >= 2 && t.len() <= 5 && upper(t) && known.contains(t) && !stop.contains(t) {
            out.push(t.to_string());
        }
    }
    out
}

fn naive_words(text: &str) -> (u64, u64) {
    let (mut b, mut s) = (0, 0);
    for raw in text.split_whitespace() {
        match strip(raw).to_lowercase().as_str() {
            "buy" | "buys" | "buying" | "bought" => b += 1,
            "sell" | "sells" | "selling" | "sold" => s += 1,
            _ => {}
        }
    }
    (b, s)
}

/// Per-ticker, per-day figures over `range`, as the pipeline defines them.
pub fn oracle_days(data: &SyntheticData, range: DateRange) -> BTreeMap<String, Vec<Day>> {
    let known: BTreeSet<String> = data.prices.keys().cloned().collect();
    let stop: BTreeSet<String> = data.stopwords.iter().cloned().collect();

    // (ticker, day) -> (mentions, buy, sell)
    let mut activity: BTreeMap<(String, NaiveDate), (u64, u64, u64)> = BTreeMap::new();
    for s in &data.submissions {
        if s.score < 1 {
            continue;
        }
        let deleted = matches!(s.selftext, SelfText::Deleted | SelfText::Removed)
            || s.author.as_deref() == Some("[deleted]");
        if deleted {
            continue;
        }
        let day = NaiveDate::from_ymd_opt(1970, 1, 1).unwrap() + Days::new((s.created_utc / 86_400) as u64);
        if day < range.start || day > range.end {
            continue;
        }
        let mut text = s.title.clone();
        if let SelfText::Present(body) = &s.selftext {
            text.push('\n');
            text.push_str(body);
        }
        let found = naive_tickers(&text, &known, &stop);
        let (b, sl) = naive_words(&text);
        let distinct: BTreeSet<&String> = found.iter().collect();
        for t in distinct {
            let e = activity.entry((t.clone(), day)).or_default();
            e.0 += found.iter().filter(|x| *x == t).count() as u64;
            e.1 += b;
            e.2 += sl;
        }
    }

    let mut out = BTreeMap::new();
    for (ticker, bars) in &data.prices {
        let first = bars.first().unwrap().date;
        let last = bars.last().unwrap().date;
        let fill_start = (range.start - Days::new(MA_DAYS + 7)).max(first);
        let fill_end = range.end.max(last);
        // Close of every calendar day: the latest bar on or before it.
        let mut closes = BTreeMap::new();
        let mut day = first;
        let mut k = 0;
        while day <= fill_end {
            while k + 1 < bars.len() && bars[k + 1].date <= day {
                k += 1;
            }
            closes.insert(day, bars[k].close);
            day = day + Days::new(1);
        }
        let close = |d: NaiveDate| closes[&d];
        let change = |from: NaiveDate, to: NaiveDate| {
            let (a, b) = (close(from), close(to));
            100.0 * (b - a) / a
        };
        let before = |d: NaiveDate, k: u64| {
            let from = d - Days::new(k);
            (from >= fill_start).then(|| change(from, d))
        };
        let mut days = Vec::new();
        let mut d = range.start;
        while d <= range.end {
            let bar = bars.iter().find(|b| b.date == d);
            let (mentions, buy, sell) = activity.get(&(ticker.clone(), d)).copied().unwrap_or_default();
            let mut b = [None; 3];
            let mut ma = [None; 3];
            for (i, k) in WINDOW_DAYS[..3].iter().enumerate() {
                b[i] = before(d, *k);
                let prev: Option<Vec<f64>> = (1..=MA_DAYS).map(|j| before(d - Days::new(j), *k)).collect();
                ma[i] = prev.map(|v| v.iter().sum::<f64>() / MA_DAYS as f64);
            }
            let mut a = [None; 5];
            for (i, k) in WINDOW_DAYS.iter().enumerate() {
                let to = d + Days::new(*k);
                a[i] = (to <= fill_end).then(|| change(d, to));
            }
            days.push(Day {
                date: d,
                mentions,
                buy,
                sell,
                signal: if buy > sell {
                    Sig::Buy
                } else if sell > buy {
                    Sig::Sell
                } else {
                    Sig::None
                },
                trading: bar.is_some(),
                volatility: bar.map(|b| (b.high - b.low) / b.close).unwrap_or(0.0),
                volume: bar.map(|b| b.volume).unwrap_or(0),
                before: b,
                after: a,
                ma,
            });
            d = d + Days::new(1);
        }
        out.insert(ticker.clone(), days);
    }
    out
}

fn is_weekend(d: NaiveDate) -> bool {
    matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn x_index(x: Horizon) -> usize {
    match x {
        Horizon::Day => 0,
        Horizon::ThreeDays => 1,
        Horizon::Week => 2,
        _ => panic!("not a look-back window"),
    }
}

/// Days chosen by `spec` for one ticker; one list per random trial.
pub fn oracle_select<'a>(days: &'a [Day], ticker: &str, spec: &StrategySpec) -> Vec<Vec<&'a Day>> {
    let rows: Vec<&Day> = days
        .iter()
        .filter(|d| match spec.date_range {
            Some(r) => d.date >= r.start && d.date <= r.end,
            None => true,
        })
        .collect();
    let ok = |d: &Day| !spec.trading_days_only || d.trading;
    let mut picked = Vec::new();
    let count = |side: SignalSide| {
        let want = if side == SignalSide::Buy { Sig::Buy } else { Sig::Sell };
        rows.iter().filter(|d| ok(d) && d.signal == want).count()
    };
    match spec.kind {
        StrategyKind::AllDays => picked.push(rows.iter().copied().filter(|d| ok(d)).collect()),
        StrategyKind::MentionDays => {
            picked.push(rows.iter().copied().filter(|d| ok(d) && d.mentions > 0).collect())
        }
        StrategyKind::BuySignalDays => {
            picked.push(rows.iter().copied().filter(|d| ok(d) && d.signal == Sig::Buy).collect())
        }
        StrategyKind::SellSignalDays => {
            picked.push(rows.iter().copied().filter(|d| ok(d) && d.signal == Sig::Sell).collect())
        }
        StrategyKind::ReactiveBuy { x } | StrategyKind::ProactiveBuy { x } => {
            let i = x_index(x);
            let reactive = matches!(spec.kind, StrategyKind::ReactiveBuy { .. });
            let mut sel = Vec::new();
            for d in &rows {
                if !ok(d) || d.signal != Sig::Buy {
                    continue;
                }
                let (Some(b), Some(a)) = (d.before[i], d.after[i]) else { continue };
                if (reactive && b > a) || (!reactive && b < a) {
                    sel.push(*d);
                }
            }
            picked.push(sel);
        }
        StrategyKind::MaFilteredBuy { mode } => {
            let mut sel = Vec::new();
            for d in &rows {
                if !ok(d) || d.signal != Sig::Buy {
                    continue;
                }
                let mut below = Vec::new();
                for i in 0..3 {
                    if let (Some(b), Some(m)) = (d.before[i], d.ma[i]) {
                        below.push(b < m);
                    }
                }
                if below.len() < 3 {
                    continue;
                }
                let pass = match mode {
                    MaMode::AnyBelowMa => below.contains(&true),
                    MaMode::AllBelowMa => !below.contains(&false),
                };
                if pass {
                    sel.push(*d);
                }
            }
            picked.push(sel);
        }
        StrategyKind::EquallyDistributed { reference } => {
            let n = count(reference);
            let big_d = rows.len();
            let mut sel = Vec::new();
            if n > 0 {
                let step = big_d / n;
                let mut delta = 0;
                if step == 7 && (1..=n).all(|k| is_weekend(rows[step * k - 1].date)) {
                    delta = ((big_d as f64 / n as f64) / 2.0).floor() as usize;
                }
                for k in 1..=n {
                    let i = step * k + delta;
                    if i <= big_d && ok(rows[i - 1]) {
                        sel.push(rows[i - 1]);
                    }
                }
            }
            picked.push(sel);
        }
        StrategyKind::RandomlyDistributed { reference, seed, trials } => {
            let n = count(reference);
            for t in 0..trials {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(ticker));
                rng.set_stream(t as u64);
                let mut idx: Vec<usize> = rand::seq::index::sample(&mut rng, rows.len(), n).into_vec();
                idx.sort();
                picked.push(idx.into_iter().map(|i| rows[i]).filter(|d| ok(d)).collect());
            }
        }
    }
    picked
}

/// Expected figures of one strategy: per window, the list of observed changes.
#[derive(Debug, Clone, Default)]
pub struct Expected {
    pub pooled: [Vec<f64>; 5],
    pub per_ticker: BTreeMap<String, [Vec<f64>; 5]>,
    pub days: u64,
    pub mentions: u64,
    pub volatility: Vec<f64>,
    pub volume: u128,
}

pub fn oracle_evaluate(all: &BTreeMap<String, Vec<Day>>, spec: &StrategySpec) -> Expected {
    let mut e = Expected::default();
    for (ticker, days) in all {
        let mut mine: [Vec<f64>; 5] = Default::default();
        for trial in oracle_select(days, ticker, spec) {
            for d in trial {
                e.days += 1;
                e.mentions += d.mentions;
                e.volatility.push(d.volatility);
                e.volume += d.volume as u128;
                for w in 0..5 {
                    if let Some(v) = d.after[w] {
                        mine[w].push(v);
                        e.pooled[w].push(v);
                    }
                }
            }
        }
        e.per_ticker.insert(ticker.clone(), mine);
    }
    e
}

fn naive_mean(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        None
    } else {
        let mut s = 0.0;
        for x in v {
            s += x;
        }
        Some(s / v.len() as f64)
    }
}

fn naive_rate(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        None
    } else {
        Some(v.iter().filter(|x| **x > 0.0).count() as f64 / v.len() as f64)
    }
}

fn naive_median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = s.len() / 2;
    Some(if s.len() % 2 == 1 { s[m] } else { (s[m - 1] + s[m]) / 2.0 })
}

/// Relative closeness, with an absolute floor for values that are zero up to rounding.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) || (a - b).abs() <= 1e-12
}

fn cmp_opt(what: &str, got: Option<f64>, want: Option<f64>, rel: f64, errs: &mut Vec<String>) {
    match (got, want) {
        (Some(g), Some(w)) if close(g, w, rel) => {}
        (None, None) => {}
        _ => errs.push(format!("{what}: got {got:?}, want {want:?}")),
    }
}

/// Every mismatch between a library report and the oracle; empty when they agree.
/// Also returns the number of compared cells.
pub fn compare(report: &EvaluationReport, want: &Expected, rel: f64) -> (Vec<String>, usize) {
    let mut errs = Vec::new();
    let mut cells = 0;
    let label = report.label();
    for (w, y) in Horizon::AFTER.iter().enumerate() {
        let v = &want.pooled[w];
        if report.n(*y) != v.len() as u64 {
            errs.push(format!("{label} n({y}): got {}, want {}", report.n(*y), v.len()));
        }
        cmp_opt(&format!("{label} avg({y})"), report.avg_change(*y), naive_mean(v), rel, &mut errs);
        cmp_opt(&format!("{label} success({y})"), report.success_rate(*y), naive_rate(v), rel, &mut errs);
        cells += 3;
        let mut means = Vec::new();
        let mut rates = Vec::new();
        for (t, lists) in &want.per_ticker {
            let got = &report.per_ticker[t].after[w];
            let l = &lists[w];
            if got.n != l.len() as u64 {
                errs.push(format!("{label} {t} n({y}): got {}, want {}", got.n, l.len()));
            }
            cmp_opt(&format!("{label} {t} avg({y})"), got.avg_change(), naive_mean(l), rel, &mut errs);
            cmp_opt(&format!("{label} {t} success({y})"), got.success_rate(), naive_rate(l), rel, &mut errs);
            cells += 3;
            means.extend(naive_mean(l));
            rates.extend(naive_rate(l));
        }
        let a = &report.across_tickers;
        cmp_opt(&format!("{label} mean change({y})"), a.mean_change[w], naive_mean(&means), rel, &mut errs);
        cmp_opt(&format!("{label} median change({y})"), a.median_change[w], naive_median(&means), rel, &mut errs);
        cmp_opt(&format!("{label} mean success({y})"), a.mean_success[w], naive_mean(&rates), rel, &mut errs);
        cmp_opt(&format!("{label} median success({y})"), a.median_success[w], naive_median(&rates), rel, &mut errs);
        cells += 4;
    }
    if report.pooled.days != want.days {
        errs.push(format!("{label} days: got {}, want {}", report.pooled.days, want.days));
    }
    let days = want.days.max(1) as f64;
    cmp_opt(
        &format!("{label} avg mentions"),
        report.pooled.avg_mentions(),
        (want.days > 0).then(|| want.mentions as f64 / days),
        rel,
        &mut errs,
    );
    cmp_opt(
        &format!("{label} avg volatility"),
        report.pooled.avg_volatility(),
        naive_mean(&want.volatility),
        rel,
        &mut errs,
    );
    cmp_opt(
        &format!("{label} avg volume"),
        report.pooled.avg_volume(),
        (want.days > 0).then(|| want.volume as f64 / days),
        rel,
        &mut errs,
    );
    cells += 4;
    (errs, cells)
}

/// All strategy kinds, over the whole range and again over `sub`.
pub fn all_specs(seed: u64, trials: u32, sub: DateRange) -> Vec<StrategySpec> {
    let mut specs = StrategySpec::standard_set(seed, trials);
    specs.push(StrategySpec::new(StrategyKind::EquallyDistributed { reference: SignalSide::Sell }));
    specs.push(StrategySpec::new(StrategyKind::RandomlyDistributed {
        reference: SignalSide::Sell,
        seed: seed + 1,
        trials,
    }));
    let mut tdo: Vec<StrategySpec> = StrategySpec::standard_set(seed, trials)
        .into_iter()
        .map(|mut s| {
            s.trading_days_only = true;
            s
        })
        .collect();
    let ranged: Vec<StrategySpec> =
        StrategySpec::standard_set(seed, trials).into_iter().map(|s| s.in_range(sub)).collect();
    specs.append(&mut tdo);
    specs.extend(ranged);
    specs
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub data: SyntheticData,
    pub config: wsbtrace::pipeline::PipelineConfig,
    pub range: DateRange,
    pub sub_range: DateRange,
}

pub const TICKERS: [&str; 5] = ["GME", "AMC", "BB", "NOK", "TSLA"];

/// Writes a synthetic project of `days` calendar days and `submissions` posts to a temp dir.
pub fn fixture(seed: u64, days: u64, submissions: usize) -> Fixture {
    let start = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
    let range = DateRange::new(start, start + Days::new(days - 1)).unwrap();
    let sub_range = DateRange::new(start, start + Days::new(days * 3 / 4)).unwrap();
    let mut cfg = wsbtrace::synthetic::SyntheticConfig::new(seed, &TICKERS, range, submissions);
    cfg.lead_days = 45;
    let data = wsbtrace::synthetic::generate(&cfg);
    let dir = tempfile::tempdir().unwrap();
    let paths = wsbtrace::synthetic::write_fixture(&data, dir.path()).unwrap();
    let mut config =
        wsbtrace::pipeline::PipelineConfig::for_fixture(&paths, dir.path(), range, Some(sub_range));
    config.seed = seed;
    let text = config.to_json();
    let config = wsbtrace::pipeline::PipelineConfig::from_json(&text, dir.path()).unwrap();
    Fixture { dir, data, config, range, sub_range }
}
