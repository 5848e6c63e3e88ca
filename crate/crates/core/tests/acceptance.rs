//! Acceptance suite: one PASS/FAIL line per criterion; exits non-zero if any fails.

mod common;
mod stub;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use chrono::{Days, NaiveDate};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestCaseError, TestRunner};

use wsbtrace::backtest::{
    equally_distributed_days, evaluate_strategy, random_days, StrategyKind, StrategySpec,
};
use wsbtrace::corpus::{crawl_archive, CrawlConfig, CrawlError, Crawler, HttpArchive};
use wsbtrace::lexer::{detect_tickers, TickerLexicon, TransactionCounts};
use wsbtrace::market::{calendar_fill, relative_volatility, PriceSeries, RawBar};
use wsbtrace::pipeline::{run_pipeline, Stage, SUMMARY_FILE};
use wsbtrace::report::{self, Format, Table};
use wsbtrace::signals::{
    classify_buy_signal, join_market, read_summaries_csv, Activity, ActivityTable, Signal,
    SignalClass, SummaryTable,
};
use wsbtrace::{DateRange, Horizon, WindowLengths};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn d(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

// 1. Ticker rules on documented example phrases.
fn ticker_rules() -> Outcome {
    let lex = TickerLexicon::new(
        ["AAPL", "CRM", "COST", "SHOP", "NOW", "CAR", "GM", "GME", "MSFT", "F"],
        ["GDP", "CAC"],
    );
    let cases: &[(&str, &[&str])] = &[
        ("AAPL for Apple Inc., CRM for Salesforce", &["AAPL", "CRM"]),
        ("($AAPL, $CRM)", &["AAPL", "CRM"]),
        ("$COST for Costco, $SHOP for Shopify, $NOW for ServiceNow, $CAR for Avis", &["COST", "SHOP", "NOW", "CAR"]),
        ("BUY THIS STOCK NOW", &["NOW"]),
        ("GM for General Manager or General Motors Co.", &["GM"]),
        ("GDP for a country's Gross Domestic Product", &[]),
        ("CAC for Customer Acquisition Cost", &[]),
        ("Ford Motor Company ($F)", &["F"]),
        ("F this, F that", &[]),
        ("excludes monetary values such as $1000", &[]),
        ("$1000 $GDP", &["GDP"]),
        ("JPMorgan Chase & Co. (JPM) on GameStop", &[]),
        ("only 13.4% of all $GME mentions and $MSFT", &["GME", "MSFT"]),
        ("lowercase gme and msft are words", &[]),
    ];
    let mut n = 0;
    for (text, want) in cases {
        let got: Vec<String> = detect_tickers(text, &lex).into_iter().map(|m| m.symbol).collect();
        check(got == *want, format!("{text:?}: got {got:?}, want {want:?}"))?;
        n += 1;
    }
    Ok(format!("{n} example phrases"))
}

fn three_day_summary(closes: [f64; 3]) -> wsbtrace::DailySummary {
    let start = d("2021-05-01");
    let raw: Vec<RawBar<f64>> = closes
        .iter()
        .enumerate()
        .map(|(i, c)| RawBar {
            date: start + Days::new(i as u64),
            open: *c,
            high: *c,
            low: *c,
            close: *c,
            volume: 1,
        })
        .collect();
    let range = DateRange::new(start, start + Days::new(2)).unwrap();
    let series = PriceSeries::build("X", &raw, range, WindowLengths::default()).unwrap();
    let mut act = ActivityTable::empty(range);
    act.cells.entry("X".into()).or_default().insert(
        start + Days::new(1),
        Activity { mentions: 1, tx: TransactionCounts { buy: 1, ..Default::default() } },
    );
    let table = join_market(&act.materialize(["X"]), &BTreeMap::from([("X".to_string(), series)])).unwrap();
    table["X"][1].clone()
}

// 2. The worked reactive/proactive example.
fn worked_example() -> Outcome {
    let r = three_day_summary([10.0, 17.0, 16.0]);
    check(r.signal == Signal::Buy, "middle day must carry a buy signal")?;
    let c = classify_buy_signal(&r, Horizon::Day);
    check(c == Ok(SignalClass::Reactive), format!("10→17→16 gave {c:?}"))?;
    let p = three_day_summary([10.0, 11.0, 20.0]);
    let c = classify_buy_signal(&p, Horizon::Day);
    check(c == Ok(SignalClass::Proactive), format!("10→11→20 gave {c:?}"))?;
    Ok("10→17→16 reactive, 10→11→20 proactive".into())
}

fn summaries_of(dir: &Path) -> SummaryTable<f64> {
    let f = fs::File::open(dir.join(SUMMARY_FILE)).unwrap();
    read_summaries_csv(std::io::BufReader::new(f)).unwrap()
}

// 3. Every report cell against the brute-force oracle, plus pipeline runtime.
fn oracle_equivalence() -> Outcome {
    let f = common::fixture(2021, 800, 20_000);
    let t0 = Instant::now();
    run_pipeline(&f.config, Stage::All).map_err(|e| e.to_string())?;
    let elapsed = t0.elapsed();
    check(elapsed <= Duration::from_secs(60), format!("pipeline took {elapsed:?}"))?;
    let table = summaries_of(&f.config.output_dir);
    check(table.len() == 5, format!("portfolio has {} tickers", table.len()))?;
    let mut want = common::oracle_days(&f.data, f.range);
    want.retain(|t, _| table.contains_key(t));
    let mut cells = 0;
    let specs = common::all_specs(f.config.seed, 5, f.sub_range);
    for spec in &specs {
        let got = evaluate_strategy(&table, spec).map_err(|e| e.to_string())?;
        let (errs, n) = common::compare(&got, &common::oracle_evaluate(&want, spec), 1e-9);
        check(errs.is_empty(), format!("{spec}: {}", errs.join("; ")))?;
        cells += n;
    }
    Ok(format!(
        "{} strategies, {cells} cells within 1e-9; pipeline {:.2}s",
        specs.len(),
        elapsed.as_secs_f64()
    ))
}

// 4. Equally distributed index sets computed by hand.
fn baseline_formula() -> Outcome {
    let never = |_: usize| false;
    check(equally_distributed_days(10, 2, never).unwrap() == [5, 10], "(10,2)")?;
    // Days 7 and 14 are weekends: delta = floor(7/2) = 3, 17 > 14 is dropped.
    let weekend = |i: usize| i.is_multiple_of(7) || i % 7 == 6;
    check(equally_distributed_days(14, 2, weekend).unwrap() == [10], "(14,2) weekend")?;
    let year: Vec<usize> = (1..=12).map(|k| 30 * k).collect();
    check(equally_distributed_days(365, 12, never).unwrap() == year, "(365,12)")?;
    let all: Vec<usize> = (1..=17).collect();
    check(equally_distributed_days(17, 17, never).unwrap() == all, "(D,D)")?;
    // Step 7 on a real calendar starting on a Sunday: every 7th day is a Saturday.
    let start = d("2021-01-03");
    let cal = |i: usize| wsbtrace::dates::is_weekend(start + Days::new(i as u64 - 1));
    let want: Vec<usize> = (1..=9).map(|k| 7 * k + 3).collect();
    check(equally_distributed_days(70, 10, cal).unwrap() == want, "(70,10) calendar weekend")?;
    check(equally_distributed_days(3, 4, never).is_err(), "n > D must fail")?;
    Ok("(10,2) (14,2 weekend) (365,12) (D,D) (70,10 weekend)".into())
}

fn runner() -> TestRunner {
    TestRunner::new(PropConfig { cases: 1000, failure_persistence: None, ..PropConfig::default() })
}

// 5. Calendar fill invariants over random trading calendars.
fn calendar_fill_invariants() -> Outcome {
    let strategy = (
        prop::collection::vec((any::<bool>(), 1.0f64..500.0, 0.0f64..0.2, 0u64..1_000_000), 2..120),
        0usize..10,
    );
    runner()
        .run(&strategy, |(days, skip)| {
            let start = d("2020-02-01");
            let mut raw = Vec::new();
            for (i, (trades, close, spread, volume)) in days.iter().enumerate() {
                if i == 0 || *trades {
                    raw.push(RawBar {
                        date: start + Days::new(i as u64),
                        open: *close,
                        high: close * (1.0 + spread),
                        low: close * (1.0 - spread),
                        close: *close,
                        volume: *volume,
                    });
                }
            }
            let first = start + Days::new(skip.min(days.len() - 1) as u64);
            let range = DateRange::new(first, start + Days::new(days.len() as u64 + 5)).unwrap();
            let bars = calendar_fill(&raw, range).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(bars.len(), range.num_days());
            let mut prev: Option<f64> = raw.iter().rfind(|b| b.date < first).map(|b| b.close);
            for (i, b) in bars.iter().enumerate() {
                prop_assert_eq!(b.date, first + Days::new(i as u64));
                match raw.iter().find(|r| r.date == b.date) {
                    Some(r) => {
                        prop_assert!(b.is_trading_day);
                        prop_assert_eq!((b.high, b.low, b.close, b.volume), (r.high, r.low, r.close, r.volume));
                    }
                    None => {
                        let p = prev.expect("covered");
                        prop_assert!(!b.is_trading_day);
                        prop_assert_eq!(b.volume, 0);
                        prop_assert_eq!((b.high, b.low, b.close), (p, p, p));
                        prop_assert_eq!(relative_volatility(b), 0.0);
                    }
                }
                prev = Some(b.close);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("1000 random calendars, no violations".into())
}

fn series_with_signals(closes: &[u32], buys: &[bool]) -> SummaryTable<f64> {
    let start = d("2021-01-01");
    let raw: Vec<RawBar<f64>> = closes
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let c = *c as f64;
            RawBar { date: start + Days::new(i as u64), open: c, high: c, low: c, close: c, volume: 1 }
        })
        .collect();
    let range = DateRange::new(start, start + Days::new(closes.len() as u64 - 1)).unwrap();
    let series = PriceSeries::build("X", &raw, range, WindowLengths::default()).unwrap();
    let mut act = ActivityTable::empty(range);
    for (i, b) in buys.iter().enumerate() {
        if *b {
            act.cells.entry("X".into()).or_default().insert(
                start + Days::new(i as u64),
                Activity { mentions: 1, tx: TransactionCounts { buy: 1, ..Default::default() } },
            );
        }
    }
    join_market(&act.materialize(["X"]), &BTreeMap::from([("X".to_string(), series)])).unwrap()
}

// 6. Reactive / proactive / neutral partition of classifiable buy days.
fn partition_property() -> Outcome {
    // Few distinct prices so equal changes (neutral days) actually occur.
    let strategy = (1usize..40).prop_flat_map(|n| {
        (prop::collection::vec(1u32..6, n + 8), prop::collection::vec(any::<bool>(), n + 8))
    });
    runner()
        .run(&strategy, |(closes, buys)| {
            let table = series_with_signals(&closes, &buys);
            let rows = &table["X"];
            for x in Horizon::BEFORE {
                let mut classes = BTreeMap::new();
                for (i, s) in rows.iter().enumerate() {
                    if s.signal != Signal::Buy || s.before(x).is_none() || s.after(x).is_none() {
                        continue;
                    }
                    let c = classify_buy_signal(s, x).unwrap();
                    let (b, a) = (s.before(x).unwrap(), s.after(x).unwrap());
                    if b != a {
                        prop_assert!(c == SignalClass::Reactive || c == SignalClass::Proactive);
                    } else {
                        prop_assert_eq!(c, SignalClass::Neutral);
                    }
                    classes.insert(i, c);
                }
                let days = |kind| {
                    let r = evaluate_strategy(&table, &StrategySpec::new(kind)).unwrap();
                    r.pooled.days
                };
                let reactive = days(StrategyKind::ReactiveBuy { x });
                let proactive = days(StrategyKind::ProactiveBuy { x });
                let neutral = classes.values().filter(|c| **c == SignalClass::Neutral).count() as u64;
                prop_assert_eq!(reactive, classes.values().filter(|c| **c == SignalClass::Reactive).count() as u64);
                prop_assert_eq!(reactive + proactive + neutral, classes.len() as u64);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("1000 generated series, zero violations".into())
}

fn in_memory_table(f: &common::Fixture, k: f64) -> SummaryTable<f64> {
    let corpus = wsbtrace::corpus::filter_corpus(
        f.data.submissions.clone(),
        &wsbtrace::corpus::CorpusFilter { min_score: 1, drop_deleted: true, range: f.range },
    );
    let act = wsbtrace::signals::aggregate_activity(&corpus, &f.data.lexicon, &Default::default());
    let mut series = BTreeMap::new();
    for (t, raw) in &f.data.prices {
        let range = DateRange::new(raw[0].date, f.range.end).unwrap();
        let s = PriceSeries::build(t, raw, range, WindowLengths::default()).unwrap();
        series.insert(t.clone(), if k == 1.0 { s } else { s.scaled(k) });
    }
    let daily = act.materialize(f.data.prices.keys().map(String::as_str));
    join_market(&daily, &series).unwrap()
}

// 7. Multiplying every price by 7.3 changes nothing that is relative.
fn scale_invariance() -> Outcome {
    let f = common::fixture(73, 300, 4000);
    let base = in_memory_table(&f, 1.0);
    let scaled = in_memory_table(&f, 7.3);
    let near = |a: f64, b: f64| common::close(a, b, 1e-9);
    let opt_near = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => near(a, b),
        (None, None) => true,
        _ => false,
    };
    let mut cells = 0;
    for (t, rows) in &base {
        for (a, b) in rows.iter().zip(&scaled[t]) {
            check(near(a.volatility, b.volatility), format!("{t} {} volatility", a.date))?;
            for (x, y) in a.change_before.iter().chain(&a.change_after).chain(&a.ma_of_change).zip(
                b.change_before.iter().chain(&b.change_after).chain(&b.ma_of_change),
            ) {
                check(opt_near(*x, *y), format!("{t} {} change", a.date))?;
                cells += 1;
            }
            for x in Horizon::BEFORE {
                check(classify_buy_signal(a, x) == classify_buy_signal(b, x), format!("{t} {} class", a.date))?;
            }
        }
    }
    for spec in common::all_specs(7, 5, f.sub_range) {
        let ra = evaluate_strategy(&base, &spec).unwrap();
        let rb = evaluate_strategy(&scaled, &spec).unwrap();
        for y in Horizon::AFTER {
            check(ra.n(y) == rb.n(y), format!("{spec} n({y})"))?;
            check(opt_near(ra.avg_change(y), rb.avg_change(y)), format!("{spec} avg({y})"))?;
            check(opt_near(ra.success_rate(y), rb.success_rate(y)), format!("{spec} success({y})"))?;
            cells += 3;
        }
        check(opt_near(ra.pooled.avg_volatility(), rb.pooled.avg_volatility()), format!("{spec} volatility"))?;
    }
    Ok(format!("{cells} values unchanged under x7.3"))
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for sub in ["tables", "strategies"] {
        for e in fs::read_dir(dir.join(sub)).unwrap() {
            let p = e.unwrap().path();
            out.insert(format!("{sub}/{}", p.file_name().unwrap().to_string_lossy()), fs::read(&p).unwrap());
        }
    }
    for name in ["daily_summaries.csv", "daily_activity.csv", "portfolio.json", "corpus_stats.json"] {
        out.insert(name.into(), fs::read(dir.join(name)).unwrap());
    }
    out
}

// 8. Identical config and seed give byte-identical reports.
fn determinism() -> Outcome {
    let a = common::fixture(99, 250, 3000);
    let b = common::fixture(99, 250, 3000);
    run_pipeline(&a.config, Stage::All).map_err(|e| e.to_string())?;
    run_pipeline(&b.config, Stage::All).map_err(|e| e.to_string())?;
    let ta = read_tree(&a.config.output_dir);
    let tb = read_tree(&b.config.output_dir);
    check(ta.len() > 20, "too few report files")?;
    check(ta == tb, "report files differ between runs")?;
    let r1 = random_days(365, 40, 42, 5).unwrap();
    let r2 = random_days(365, 40, 42, 5).unwrap();
    check(r1 == r2 && r1.len() == 5, "random baseline not reproducible")?;
    check(r1 != random_days(365, 40, 43, 5).unwrap(), "seed has no effect")?;
    Ok(format!("{} files byte-identical; 5 random trials reproducible", ta.len()))
}

fn phase<'a>(
    buy: &'a wsbtrace::EvaluationReport,
    r: &'a [wsbtrace::EvaluationReport],
    p: &'a [wsbtrace::EvaluationReport],
) -> report::PhaseSignals<'a, f64> {
    report::PhaseSignals { buy, reactive: [&r[0], &r[1]], proactive: [&p[0], &p[1]] }
}

fn labels(t: &Table, cols: usize) -> Vec<Vec<String>> {
    t.rows.iter().map(|r| r[..cols].to_vec()).collect()
}

fn owned(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn csv_text_agree(t: &Table) -> Result<(), String> {
    let csv = t.render(Format::Csv);
    let text = t.render(Format::Text);
    let mut rdr = ::csv::ReaderBuilder::new().has_headers(false).from_reader(csv.as_bytes());
    let from_csv: Vec<Vec<String>> = rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    let mut want = vec![t.header.clone()];
    want.extend(t.rows.iter().cloned());
    check(from_csv == want, format!("{} csv cells differ", t.name))?;
    for (line, row) in text.lines().zip(&want) {
        let joined: Vec<&str> = row.iter().flat_map(|c| c.split_whitespace()).collect();
        check(line.split_whitespace().collect::<Vec<_>>() == joined, format!("{} text cells differ", t.name))?;
    }
    Ok(())
}

// 9. Table schemas against golden headers, with cells traced back to the reports.
fn table_structure() -> Outcome {
    let f = common::fixture(17, 300, 4000);
    run_pipeline(&f.config, Stage::Aggregate).map_err(|e| e.to_string())?;
    let table = summaries_of(&f.config.output_dir);
    let pre_table = wsbtrace::backtest::restrict_range(&table, &f.sub_range);
    let ev = |t: &SummaryTable<f64>, k| evaluate_strategy(t, &StrategySpec::new(k)).unwrap();
    let all = ev(&table, StrategyKind::AllDays);
    let mention = ev(&table, StrategyKind::MentionDays);
    let buy = ev(&table, StrategyKind::BuySignalDays);
    let sell = ev(&table, StrategyKind::SellSignalDays);
    let equal = ev(&table, StrategyKind::EquallyDistributed { reference: Default::default() });
    let random = ev(&table, StrategyKind::RandomlyDistributed { reference: Default::default(), seed: 1, trials: 5 });
    let re: Vec<_> = Horizon::BEFORE.iter().map(|&x| ev(&table, StrategyKind::ReactiveBuy { x })).collect();
    let pro: Vec<_> = Horizon::BEFORE.iter().map(|&x| ev(&table, StrategyKind::ProactiveBuy { x })).collect();
    let pre_all = ev(&pre_table, StrategyKind::AllDays);
    let pre_buy = ev(&pre_table, StrategyKind::BuySignalDays);
    let pre_re: Vec<_> = [Horizon::Day, Horizon::Week].iter().map(|&x| ev(&pre_table, StrategyKind::ReactiveBuy { x })).collect();
    let pre_pro: Vec<_> = [Horizon::Day, Horizon::Week].iter().map(|&x| ev(&pre_table, StrategyKind::ProactiveBuy { x })).collect();

    let after4 = ["1 day", "1 week", "1 month", "3 months"];
    let change_rows: Vec<Vec<String>> =
        after4.iter().map(|w| owned(&["Avg. price change (%) after", w])).collect();
    let average_rows = vec![
        owned(&["Average", "mentions"]),
        owned(&["Average", "daily volat."]),
        owned(&["Average", "daily volume"]),
    ];

    let t4 = report::table4(None, &all, &mention, &buy, &sell);
    check(t4.header == owned(&["section", "window", "benchmark", "All", "w/ Mention", "w/ Buy Sig.", "w/ Sell Sig."]), "table4 header")?;
    check(labels(&t4, 2) == [change_rows.clone(), average_rows.clone()].concat(), "table4 rows")?;
    check(t4.cell(0, "w/ Buy Sig.") == Some(report::fmt_pct(buy.avg_change(Horizon::Day)).as_str()), "table4 buy 1d")?;
    check(t4.cell(6, "All") == Some(report::fmt_volume(all.pooled.avg_volume()).as_str()), "table4 volume")?;
    check(t4.cell(0, "benchmark") == Some("NA"), "table4 missing benchmark")?;

    let t5 = report::table5(&buy, &equal, &random, &all);
    check(t5.header == owned(&["signals", "1 day", "3 days", "1 week", "1 month", "3 months"]), "table5 header")?;
    check(labels(&t5, 1) == [["buy signals"], ["equally distr."], ["randomly distr."], ["every day"]].map(|r| owned(&r)), "table5 rows")?;
    check(
        t5.cell(0, "3 months") == Some(report::fmt_rate(buy.across_tickers.mean_success[4]).as_str()),
        "table5 buy 3m",
    )?;

    let t6 = report::table6(&all, &mention, &buy, &sell, &equal, &random);
    check(t6.header == owned(&["section", "window", "Total Avg.", "Mention", "Buy Sig.", "Sell Sig.", "Eq. Distr.", "Rnd. Distr."]), "table6 header")?;
    check(labels(&t6, 2) == change_rows, "table6 rows")?;
    check(t6.cell(3, "Rnd. Distr.") == Some(report::fmt_pct(random.avg_change(Horizon::Quarter)).as_str()), "table6 random 3m")?;

    let t7 = report::table7(&all, &buy);
    check(t7.header == owned(&["ticker", "pattern", "1 day", "1 week", "1 month", "3 months"]), "table7 header")?;
    let mut want7 = Vec::new();
    for t in table.keys() {
        want7.push(owned(&[t, "Average"]));
        want7.push(owned(&[t, "Buy Signal"]));
    }
    check(labels(&t7, 2) == want7, "table7 rows")?;
    let first = table.keys().next().unwrap();
    check(
        t7.cell(1, "1 week") == Some(report::fmt_pct(buy.per_ticker[first].window(Horizon::Week).avg_change()).as_str()),
        "table7 buy 1w",
    )?;

    let t8 = report::table8(&all, &buy, [&re[0], &re[1], &re[2]], [&pro[0], &pro[1], &pro[2]]);
    check(
        t8.header
            == owned(&[
                "section", "t", "Avg", "Buy Sig.", "Reactive x=1d", "Reactive x=3d", "Reactive x=1w",
                "Proactive x=1d", "Proactive x=3d", "Proactive x=1w",
            ]),
        "table8 header",
    )?;
    let mut want8: Vec<Vec<String>> =
        ["1w", "3d", "1d"].iter().map(|t| owned(&["AVG perf (%) since", t])).collect();
    want8.extend(["1d", "3d", "1w", "1m", "3m"].iter().map(|t| owned(&["AVG perf (%) after", t])));
    check(labels(&t8, 2) == want8, "table8 rows")?;
    check(t8.cell(0, "Reactive x=1w") == Some(report::fmt_pct(re[2].avg_before(Horizon::Week)).as_str()), "table8 since")?;

    let (fl, pl) = ("Jan. 2019 – Apr. 2021", "Jan. 2019 – Dec. 2020");
    let t9 = report::table9(fl, (&all, &buy), pl, (&pre_all, &pre_buy));
    check(
        t9.header
            == owned(&[
                "section", "window", "Jan. 2019 – Apr. 2021 All", "Jan. 2019 – Apr. 2021 w/ Buy Sig.",
                "Jan. 2019 – Dec. 2020 All", "Jan. 2019 – Dec. 2020 w/ Buy Sig.",
            ]),
        "table9 header",
    )?;
    check(labels(&t9, 2) == [change_rows, average_rows].concat(), "table9 rows")?;
    check(t9.cell(4, "Jan. 2019 – Dec. 2020 w/ Buy Sig.") == Some(report::fmt_pct(pre_buy.pooled.avg_mentions()).as_str()), "table9 mentions")?;

    let re_pair = [re[0].clone(), re[2].clone()];
    let pro_pair = [pro[0].clone(), pro[2].clone()];
    let t10 = report::table10(fl, phase(&buy, &re_pair, &pro_pair), pl, phase(&pre_buy, &pre_re, &pre_pro));
    let mut h10 = owned(&["section", "t"]);
    for p in [fl, pl] {
        for c in ["All Buy", "React. Buy x=1d", "React. Buy x=1w", "Proact. Buy x=1d", "Proact. Buy x=1w"] {
            h10.push(format!("{p} {c}"));
        }
    }
    check(t10.header == h10, "table10 header")?;
    check(t10.rows.len() == 8, "table10 rows")?;
    check(
        t10.cell(7, "Jan. 2019 – Dec. 2020 Proact. Buy x=1w") == Some(report::fmt_pct(pre_pro[1].avg_change(Horizon::Quarter)).as_str()),
        "table10 cell",
    )?;
    for t in [&t4, &t5, &t6, &t7, &t8, &t9, &t10] {
        csv_text_agree(t)?;
    }
    check(report::fmt_pct(Some(0.29)) == "0.29" && report::fmt_pct::<f64>(None) == "NA", "cell format")?;
    Ok("tables 4, 5, 6, 7, 8, 9, 10 match golden schemas".into())
}

// 10. Crawl against a local stub: complete, resumable, rate-limited.
fn crawler_contract() -> Outcome {
    let stamps: Vec<i64> = (0..500).map(|i| 100_000 + i * 37).collect();
    let (start, end) = (100_000, 100_000 + 400 * 37);
    let want: BTreeSet<i64> = stamps.iter().copied().filter(|t| (start..end).contains(t)).collect();
    let server = stub::Stub::start(stamps);
    let rate = 20.0;
    let mut cfg = CrawlConfig {
        endpoint: server.url.clone(),
        page_size: 25,
        max_attempts: 2,
        initial_backoff: Duration::from_millis(5),
        timeout: Duration::from_secs(5),
        ..CrawlConfig::default()
    }
    .with_rate_limit(rate);
    // Requests 4 and 5 fail: the crawl exhausts its two attempts and must be resumed.
    server.fail([4, 5, 9]);
    let mut got = Vec::new();
    let mut crawler = Crawler::new(HttpArchive::new(&cfg), cfg.clone());
    let resume = match crawler.run(start, end, |r| got.push(r["created_utc"].as_i64().unwrap())) {
        Err(CrawlError::Exhausted { resume_before, .. }) => resume_before,
        other => return Err(format!("expected an exhausted crawl, got {other:?}")),
    };
    let phase1 = server.log().len();
    let mut again = Crawler::new(HttpArchive::new(&cfg), cfg.clone());
    again
        .resume(start, resume, |r| got.push(r["created_utc"].as_i64().unwrap()))
        .map_err(|e| e.to_string())?;
    let unique: BTreeSet<i64> = got.iter().copied().collect();
    check(unique.len() == got.len(), format!("{} duplicated records", got.len() - unique.len()))?;
    check(unique == want, format!("{} records missing", want.difference(&unique).count()))?;

    let phase2 = server.log().len();
    cfg.max_attempts = 5;
    let plain = crawl_archive(&cfg, start, end).map_err(|e| e.to_string())?;
    check(plain.len() == want.len(), "crawl_archive record count")?;

    let log = server.log();
    let interval = Duration::from_secs_f64(1.0 / rate);
    let slack = Duration::from_millis(2);
    let mut min_gap = Duration::MAX;
    // Each crawler paces its own requests; the three runs are checked separately.
    for part in [&log[..phase1], &log[phase1..phase2], &log[phase2..]] {
        for w in part.windows(2) {
            let gap = w[1].at.saturating_duration_since(w[0].at);
            check(gap + slack >= interval, format!("gap {gap:?} under {interval:?}"))?;
            min_gap = min_gap.min(gap);
        }
    }
    Ok(format!(
        "{} records, no gaps or duplicates across a resume; {} requests, min gap {:.1} ms at limit {:.1} ms",
        want.len(),
        log.len(),
        min_gap.as_secs_f64() * 1000.0,
        interval.as_secs_f64() * 1000.0
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("ticker rule conformance", ticker_rules),
        ("reactive/proactive worked example", worked_example),
        ("oracle equivalence", oracle_equivalence),
        ("baseline formula exactness", baseline_formula),
        ("calendar-fill invariants", calendar_fill_invariants),
        ("partition property", partition_property),
        ("scale invariance", scale_invariance),
        ("determinism", determinism),
        ("structural table reproduction", table_structure),
        ("crawler contract", crawler_contract),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
