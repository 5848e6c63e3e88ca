//! Seeded synthetic fixtures: a lexicon, a submission corpus and daily price bars.
//!
//! Used by the test suites and by the `synth` CLI command to produce a runnable project.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::Days;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{SelfText, Submission};
use crate::dates::{day_start_ts, is_weekend, DateRange};
use crate::lexer::TickerLexicon;
use crate::market::RawBar;

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub tickers: Vec<String>,
    /// Symbols that are listed but never generated in text.
    pub quiet_tickers: Vec<String>,
    pub range: DateRange,
    pub submissions: usize,
    /// Trading bars start this many days before `range.start`.
    pub lead_days: u64,
    /// Share of weekdays without a trading bar.
    pub holiday_rate: f64,
}

impl SyntheticConfig {
    pub fn new(seed: u64, tickers: &[&str], range: DateRange, submissions: usize) -> Self {
        Self {
            seed,
            tickers: tickers.iter().map(|s| s.to_string()).collect(),
            quiet_tickers: Vec::new(),
            range,
            submissions,
            lead_days: 7,
            holiday_rate: 0.03,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub lexicon: TickerLexicon,
    pub stopwords: Vec<String>,
    pub sectors: BTreeMap<String, String>,
    pub submissions: Vec<Submission>,
    pub prices: BTreeMap<String, Vec<RawBar<f64>>>,
    pub range: DateRange,
}

/// Ticker stop words used in generated text.
pub const TICKER_STOPWORDS: [&str; 6] = ["CEO", "DD", "GDP", "USA", "IMO", "EPS"];

const SECTORS: [&str; 4] = ["Technology", "Consumer Cyclical", "Healthcare", "Communication Services"];
const FLAIRS: [&str; 5] = ["Discussion", "Meme", "DD", "YOLO", "Gain"];
const FILLER: [&str; 14] = [
    "the", "to", "moon", "is", "going", "and", "this", "week", "rocket", "tendies", "earnings",
    "dip", "apes", "strong",
];
const BUY_WORDS: [&str; 4] = ["buy", "buying", "bought", "buys"];
const SELL_WORDS: [&str; 4] = ["sell", "selling", "sold", "sells"];
const OTHER_WORDS: [&str; 6] = ["hold", "holding", "calls", "puts", "call", "held"];

pub fn generate(config: &SyntheticConfig) -> SyntheticData {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let tickers = &config.tickers;

    let mut sectors = BTreeMap::new();
    let listed: Vec<&String> = tickers.iter().chain(&config.quiet_tickers).collect();
    for (i, t) in listed.iter().enumerate() {
        sectors.insert((*t).clone(), SECTORS[i % SECTORS.len()].to_string());
    }
    let mut lexicon = TickerLexicon::new(listed.iter().map(|s| s.as_str()), TICKER_STOPWORDS);
    for (t, s) in &sectors {
        lexicon = lexicon.with_sector(t, s);
    }

    let prices = listed
        .iter()
        .map(|t| ((*t).clone(), price_bars(&mut rng, config)))
        .collect();

    // Zipf-like popularity so rankings are not flat.
    let weights: Vec<f64> = (1..=tickers.len()).map(|r| 1.0 / r as f64).collect();
    let total: f64 = weights.iter().sum();
    let first = day_start_ts(config.range.start);
    let span = config.range.num_days() as i64 * 86_400;
    let submissions = (0..config.submissions)
        .map(|i| {
            let created_utc = first + rng.random_range(0..span);
            let (title, body) = if tickers.is_empty() {
                ("nothing to see".to_string(), None)
            } else {
                post_text(&mut rng, tickers, &weights, total)
            };
            let selftext = match rng.random_range(0..20) {
                0 => SelfText::Deleted,
                1 => SelfText::Removed,
                2..=5 => SelfText::Absent,
                _ => body.map(SelfText::Present).unwrap_or(SelfText::Empty),
            };
            Submission {
                id: format!("s{i:06}"),
                created_utc,
                title,
                selftext,
                score: rng.random_range(-2..500),
                flair: (rng.random_range(0..4) > 0)
                    .then(|| FLAIRS[rng.random_range(0..FLAIRS.len())].to_string()),
                author: Some(if rng.random_range(0..50) == 0 {
                    "[deleted]".to_string()
                } else {
                    format!("user{}", rng.random_range(0..2000))
                }),
                num_comments: rng.random_range(0..300),
            }
        })
        .collect();

    SyntheticData {
        lexicon,
        stopwords: TICKER_STOPWORDS.iter().map(|s| s.to_string()).collect(),
        sectors,
        submissions,
        prices,
        range: config.range,
    }
}

fn pick_ticker<'a>(rng: &mut ChaCha8Rng, tickers: &'a [String], weights: &[f64], total: f64) -> &'a str {
    let mut u = rng.random::<f64>() * total;
    for (t, w) in tickers.iter().zip(weights) {
        if u < *w {
            return t;
        }
        u -= w;
    }
    &tickers[tickers.len() - 1]
}

fn post_text(
    rng: &mut ChaCha8Rng,
    tickers: &[String],
    weights: &[f64],
    total: f64,
) -> (String, Option<String>) {
    let sentence = |rng: &mut ChaCha8Rng, len: usize| {
        let mut words = Vec::with_capacity(len);
        for _ in 0..len {
            let w = match rng.random_range(0..20) {
                0..=2 => {
                    let t = pick_ticker(rng, tickers, weights, total);
                    match rng.random_range(0..4) {
                        0 => format!("${t}"),
                        1 => format!("{t}!"),
                        _ => t.to_string(),
                    }
                }
                3 => BUY_WORDS[rng.random_range(0..BUY_WORDS.len())].to_string(),
                4 => SELL_WORDS[rng.random_range(0..SELL_WORDS.len())].to_string(),
                5 => OTHER_WORDS[rng.random_range(0..OTHER_WORDS.len())].to_string(),
                6 => TICKER_STOPWORDS[rng.random_range(0..TICKER_STOPWORDS.len())].to_string(),
                7 => format!("${}", rng.random_range(1..5000)),
                _ => FILLER[rng.random_range(0..FILLER.len())].to_string(),
            };
            words.push(w);
        }
        words.join(" ")
    };
    let title_len = rng.random_range(3..10);
    let title = sentence(rng, title_len);
    let body = (rng.random_range(0..3) > 0).then(|| {
        let len = rng.random_range(5..40);
        sentence(rng, len)
    });
    (title, body)
}

/// Weekday bars from `lead_days` before the range through its end, following a
/// multiplicative random walk.
fn price_bars(rng: &mut ChaCha8Rng, config: &SyntheticConfig) -> Vec<RawBar<f64>> {
    let start = config.range.start - Days::new(config.lead_days);
    let mut close = rng.random_range(5.0..400.0_f64);
    let drift = rng.random_range(-0.001..0.002);
    let vol = rng.random_range(0.01..0.05);
    let base_volume = rng.random_range(100_000..50_000_000u64);
    let mut out = Vec::new();
    let mut day = start;
    // Always trade on the first day so the fill has something to carry.
    let mut first = true;
    while day <= config.range.end {
        let holiday = !first && rng.random::<f64>() < config.holiday_rate;
        if first || (!is_weekend(day) && !holiday) {
            let open = close;
            let shock: f64 = (rng.random::<f64>() - 0.5) * 2.0 * vol;
            close = (close * (1.0 + drift + shock)).max(0.01);
            let high = open.max(close) * (1.0 + rng.random::<f64>() * vol);
            let low = open.min(close) * (1.0 - rng.random::<f64>() * vol);
            out.push(RawBar {
                date: day,
                open,
                high,
                low,
                close,
                volume: base_volume / 2 + rng.random_range(0..base_volume),
            });
            first = false;
        }
        day = day + Days::new(1);
    }
    out
}

/// Paths of a fixture written by [`write_fixture`].
#[derive(Debug, Clone)]
pub struct FixturePaths {
    pub corpus: PathBuf,
    pub ticker_table: PathBuf,
    pub etf_list: PathBuf,
    pub ticker_stopwords: PathBuf,
    pub text_stopwords: PathBuf,
    pub price_dir: PathBuf,
}

/// Writes the fixture under `dir` in the on-disk input formats.
pub fn write_fixture(data: &SyntheticData, dir: &Path) -> io::Result<FixturePaths> {
    let price_dir = dir.join("prices");
    fs::create_dir_all(&price_dir)?;
    let paths = FixturePaths {
        corpus: dir.join("submissions.jsonl"),
        ticker_table: dir.join("tickers.csv"),
        etf_list: dir.join("etfs.txt"),
        ticker_stopwords: dir.join("ticker_stopwords.txt"),
        text_stopwords: dir.join("stopwords.txt"),
        price_dir,
    };

    let mut w = BufWriter::new(fs::File::create(&paths.corpus)?);
    for s in &data.submissions {
        serde_json::to_writer(&mut w, &s.to_record())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;

    let mut table = csv::Writer::from_path(&paths.ticker_table)?;
    table.write_record(["symbol", "name", "sector"])?;
    for (t, sector) in &data.sectors {
        table.write_record([t.as_str(), &format!("{t} Corp"), sector.as_str()])?;
    }
    table.flush()?;

    fs::write(&paths.etf_list, "# no funds\n")?;
    fs::write(&paths.ticker_stopwords, data.stopwords.join("\n") + "\n")?;
    fs::write(&paths.text_stopwords, "the\nto\nis\nand\nthis\n")?;

    for (t, bars) in &data.prices {
        let mut w = csv::Writer::from_path(paths.price_dir.join(format!("{t}.csv")))?;
        w.write_record(["date", "open", "high", "low", "close", "volume"])?;
        for b in bars {
            w.write_record([
                b.date.to_string(),
                b.open.to_string(),
                b.high.to_string(),
                b.low.to_string(),
                b.close.to_string(),
                b.volume.to_string(),
            ])?;
        }
        w.flush()?;
    }
    Ok(paths)
}
