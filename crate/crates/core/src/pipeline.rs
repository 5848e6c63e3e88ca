//! Configuration-driven pipeline: fetch → ingest → aggregate → backtest → report.
//!
//! Every stage writes its artifacts under the output directory and records a content hash of
//! its inputs in `.cache/`; a stage whose inputs are unchanged is skipped. Files are written
//! through a temporary sibling and renamed, so a failing run never leaves a partial artifact.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::Days;
use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::backtest::{
    evaluate_strategy, restrict_range, sector_distribution, select_portfolio, BacktestError,
    EvaluationReport, MaMode, SignalSide, StrategyKind, StrategySpec,
};
use crate::corpus::{
    corpus_stats, crawl_archive, engagement_profile, filter_corpus, read_json_lines, CorpusFilter,
    CrawlConfig, CrawlError,
};
use crate::dates::{day_start_ts, DateRange};
use crate::horizon::{Horizon, WindowLengths};
use crate::lexer::{load_lexicon, read_word_list, KeywordMatcher, KeywordTable, LexiconError};
use crate::market::{load_price_series, MarketError, PriceSeries};
use crate::report::{self, Format, PhaseSignals, Table};
use crate::signals::{
    aggregate_activity, join_market, read_summaries_csv, write_summaries_csv, ActivityTable,
    AggregateOptions, Attribution, MentionCounting, SignalError, SummaryTable,
};

pub const ENV_ENDPOINT: &str = "WSBTRACE_ENDPOINT";
pub const ENV_RATE_LIMIT: &str = "WSBTRACE_RATE_LIMIT";

pub const ACTIVITY_FILE: &str = "daily_activity.csv";
pub const CORPUS_STATS_FILE: &str = "corpus_stats.json";
pub const PORTFOLIO_FILE: &str = "portfolio.json";
pub const SUMMARY_FILE: &str = "daily_summaries.csv";
pub const BENCHMARK_FILE: &str = "benchmark_summaries.csv";
pub const STRATEGY_DIR: &str = "strategies";
pub const TABLE_DIR: &str = "tables";
const CACHE_DIR: &str = ".cache";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconPaths {
    /// `symbol,name,sector` CSV.
    pub tickers: PathBuf,
    pub etfs: PathBuf,
    /// Upper-case words that look like tickers but are not.
    pub stopwords: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    /// Ranking windows; empty means the whole date range.
    #[serde(default)]
    pub windows: Vec<DateRange>,
}

impl Default for PortfolioConfig {
    fn default() -> Self {
        Self {
            k: default_k(),
            windows: Vec::new(),
        }
    }
}

fn default_k() -> usize {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Toggles {
    #[serde(default)]
    pub attribution: Attribution,
    #[serde(default)]
    pub counting: MentionCounting,
    #[serde(default)]
    pub trading_days_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FetchSettings {
    /// JSON-lines file the crawl writes; it is also read by the ingest stage.
    pub output: PathBuf,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub subreddit: Option<String>,
    #[serde(default)]
    pub page_size: Option<u32>,
    /// Requests per second.
    #[serde(default)]
    pub rate_limit: Option<f64>,
    #[serde(default)]
    pub max_attempts: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub corpus_files: Vec<PathBuf>,
    pub lexicon: LexiconPaths,
    /// Lower-case stop words for corpus statistics.
    #[serde(default)]
    pub text_stopwords: Option<PathBuf>,
    pub price_dir: PathBuf,
    pub output_dir: PathBuf,
    pub date_range: DateRange,
    #[serde(default)]
    pub pre_hype_range: Option<DateRange>,
    #[serde(default)]
    pub portfolio: PortfolioConfig,
    /// Fixed portfolio; skips the ranking when set.
    #[serde(default)]
    pub tickers: Option<Vec<String>>,
    #[serde(default)]
    pub benchmark: Option<String>,
    /// Defaults to the standard set seeded with `seed`.
    #[serde(default)]
    pub strategies: Option<Vec<StrategySpec>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u32,
    #[serde(default)]
    pub windows: WindowLengths,
    #[serde(default)]
    pub toggles: Toggles,
    #[serde(default = "default_min_score")]
    pub min_score: i64,
    #[serde(default = "default_true")]
    pub drop_deleted: bool,
    #[serde(default)]
    pub keywords: Option<KeywordTable>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(default)]
    pub fetch: Option<FetchSettings>,
}

fn default_seed() -> u64 {
    42
}
fn default_trials() -> u32 {
    5
}
fn default_min_score() -> i64 {
    1
}
fn default_true() -> bool {
    true
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Text]
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub range: Option<DateRange>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<FieldError>),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error("no price file for ticker {ticker} (expected {})", .path.display())]
    MissingPrices { ticker: String, path: PathBuf },
    #[error("prices for {ticker}: {source}")]
    Market { ticker: String, source: MarketError },
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Backtest(#[from] BacktestError),
    #[error("fetch failed: {0}")]
    Crawl(#[from] CrawlError),
    #[error("{0}")]
    Stage(String),
}

impl PipelineError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            _ => 1,
        }
    }

    fn config(field: &str, message: impl Into<String>) -> Self {
        PipelineError::Config(vec![FieldError {
            field: field.into(),
            message: message.into(),
        }])
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Fetch,
    Ingest,
    Aggregate,
    Backtest,
    Report,
    All,
}

impl Stage {
    pub const ORDER: [Stage; 5] = [
        Stage::Fetch,
        Stage::Ingest,
        Stage::Aggregate,
        Stage::Backtest,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Fetch => "fetch",
            Stage::Ingest => "ingest",
            Stage::Aggregate => "aggregate",
            Stage::Backtest => "backtest",
            Stage::Report => "report",
            Stage::All => "all",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ORDER
            .into_iter()
            .chain([Stage::All])
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

impl PipelineConfig {
    /// Parses a config; relative paths are resolved against `base`.
    pub fn from_json(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| {
            let field = e
                .to_string()
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "config".into());
            PipelineError::config(&field, e.to_string())
        })?;
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::config("config", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.corpus_files.iter_mut().for_each(fix);
        fix(&mut self.lexicon.tickers);
        fix(&mut self.lexicon.etfs);
        fix(&mut self.lexicon.stopwords);
        if let Some(p) = &mut self.text_stopwords {
            fix(p);
        }
        fix(&mut self.price_dir);
        fix(&mut self.output_dir);
        if let Some(f) = &mut self.fetch {
            fix(&mut f.output);
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(r) = o.range {
            self.date_range = r;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
    }

    /// Corpus inputs, including the fetch output when a fetch is configured.
    pub fn corpus_inputs(&self) -> Vec<PathBuf> {
        let mut files = self.corpus_files.clone();
        if let Some(f) = &self.fetch {
            if !files.contains(&f.output) {
                files.push(f.output.clone());
            }
        }
        files
    }

    /// Field-level checks for running up to `stage`.
    pub fn validate(&self, stage: Stage) -> Result<(), PipelineError> {
        let mut errs = Vec::new();
        let mut err = |field: &str, message: String| {
            errs.push(FieldError {
                field: field.into(),
                message,
            })
        };
        let range_ok = |r: &DateRange| r.start <= r.end;
        if !range_ok(&self.date_range) {
            err("date_range", format!("start after end ({})", self.date_range));
        }
        if let Some(p) = &self.pre_hype_range {
            if !range_ok(p) {
                err("pre_hype_range", format!("start after end ({p})"));
            } else if !self.date_range.contains_range(p) {
                err("pre_hype_range", format!("{p} is not inside date_range {}", self.date_range));
            }
        }
        for (i, w) in self.portfolio.windows.iter().enumerate() {
            if !range_ok(w) {
                err(&format!("portfolio.windows[{i}]"), format!("start after end ({w})"));
            }
        }
        if self.portfolio.k == 0 {
            err("portfolio.k", "must be at least 1".into());
        }
        if self.trials == 0 {
            err("trials", "must be at least 1".into());
        }
        if let Err(m) = self.windows.validate() {
            err("windows", m.to_string());
        }
        if let Some(ts) = &self.tickers {
            if ts.is_empty() {
                err("tickers", "must not be empty when given".into());
            }
        }
        if let Some(specs) = &self.strategies {
            for (i, s) in specs.iter().enumerate() {
                if let Err(m) = s.validate() {
                    err(&format!("strategies[{i}]"), m);
                }
            }
        }
        if self.formats.is_empty() {
            err("formats", "must list at least one format".into());
        }
        let wants = |s: Stage| stage == s || stage == Stage::All;
        let needs_inputs = stage != Stage::Fetch;
        if wants(Stage::Fetch) && stage == Stage::Fetch && self.fetch.is_none() {
            err("fetch", "the fetch stage needs a \"fetch\" section".into());
        }
        if let Some(f) = &self.fetch {
            if matches!(f.rate_limit, Some(r) if r.is_nan() || r <= 0.0) {
                err("fetch.rate_limit", "must be positive".into());
            }
            if f.page_size == Some(0) {
                err("fetch.page_size", "must be positive".into());
            }
        }
        if needs_inputs {
            let fetched = self.fetch.as_ref().map(|f| &f.output);
            if self.corpus_inputs().is_empty() {
                err("corpus_files", "no corpus file configured".into());
            }
            for (i, p) in self.corpus_files.iter().enumerate() {
                let produced = stage == Stage::All && fetched == Some(p);
                if !produced && !p.is_file() {
                    err(&format!("corpus_files[{i}]"), format!("{} does not exist", p.display()));
                }
            }
            for (field, p) in [
                ("lexicon.tickers", &self.lexicon.tickers),
                ("lexicon.etfs", &self.lexicon.etfs),
                ("lexicon.stopwords", &self.lexicon.stopwords),
            ] {
                if !p.is_file() {
                    err(field, format!("{} does not exist", p.display()));
                }
            }
            if let Some(p) = &self.text_stopwords {
                if !p.is_file() {
                    err("text_stopwords", format!("{} does not exist", p.display()));
                }
            }
            if !self.price_dir.is_dir() {
                err("price_dir", format!("{} is not a directory", self.price_dir.display()));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(PipelineError::Config(errs))
        }
    }

    /// Configured strategies with the global toggle applied.
    pub fn strategy_specs(&self) -> Vec<StrategySpec> {
        let mut specs = self
            .strategies
            .clone()
            .unwrap_or_else(|| StrategySpec::standard_set(self.seed, self.trials));
        for s in &mut specs {
            s.trading_days_only |= self.toggles.trading_days_only;
        }
        specs
    }

    fn price_path(&self, ticker: &str) -> PathBuf {
        self.price_dir.join(format!("{ticker}.csv"))
    }

    fn crawl_config(&self) -> Result<CrawlConfig, PipelineError> {
        let f = self
            .fetch
            .as_ref()
            .ok_or_else(|| PipelineError::config("fetch", "missing fetch section"))?;
        let mut c = CrawlConfig::default();
        if let Some(e) = std::env::var(ENV_ENDPOINT).ok().or_else(|| f.endpoint.clone()) {
            c.endpoint = e;
        }
        if let Some(s) = &f.subreddit {
            c.subreddit = s.clone();
        }
        if let Some(p) = f.page_size {
            c.page_size = p;
        }
        if let Some(m) = f.max_attempts {
            c.max_attempts = m;
        }
        let rate = match std::env::var(ENV_RATE_LIMIT) {
            Ok(v) => Some(v.parse::<f64>().ok().filter(|r| *r > 0.0).ok_or_else(|| {
                PipelineError::config(ENV_RATE_LIMIT, format!("not a positive number: {v:?}"))
            })?),
            Err(_) => f.rate_limit,
        };
        if let Some(r) = rate {
            c = c.with_rate_limit(r);
        }
        Ok(c)
    }
}

/// What a run did per stage.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub executed: Vec<Stage>,
    pub cached: Vec<Stage>,
    pub written: Vec<PathBuf>,
}

/// Runs `stage` and every stage it depends on. Fetch only runs when asked for, or as part of
/// `all` when a fetch section is configured.
pub fn run_pipeline(config: &PipelineConfig, stage: Stage) -> Result<RunSummary, PipelineError> {
    config.validate(stage)?;
    let out = &config.output_dir;
    fs::create_dir_all(out.join(CACHE_DIR)).map_err(io_err(out))?;
    let mut summary = RunSummary::default();
    let stages: Vec<Stage> = match stage {
        Stage::Fetch => vec![Stage::Fetch],
        Stage::All => Stage::ORDER
            .into_iter()
            .filter(|s| *s != Stage::Fetch || config.fetch.is_some())
            .collect(),
        s => Stage::ORDER
            .into_iter()
            .filter(|x| *x != Stage::Fetch && *x <= s)
            .collect(),
    };
    for s in stages {
        let key = stage_key(config, s)?;
        if cache_hit(out, s, &key) {
            info!("{s}: inputs unchanged, reusing cached artifacts");
            summary.cached.push(s);
            continue;
        }
        info!("{s}: running");
        let files = match s {
            Stage::Fetch => fetch_stage(config)?,
            Stage::Ingest => ingest_stage(config)?,
            Stage::Aggregate => aggregate_stage(config)?,
            Stage::Backtest => backtest_stage(config)?,
            Stage::Report => report_stage(config)?,
            Stage::All => unreachable!("expanded above"),
        };
        let written = commit(out, &files)?;
        store_cache(out, s, &key, &files)?;
        summary.written.extend(written);
        summary.executed.push(s);
    }
    Ok(summary)
}

/// Artifacts produced by a stage, keyed by path relative to the output directory.
type Artifacts = BTreeMap<PathBuf, Vec<u8>>;

/// Writes every artifact through a temporary file, then renames them into place. On failure
/// the temporary files are removed and nothing is renamed.
fn commit(out: &Path, files: &Artifacts) -> Result<Vec<PathBuf>, PipelineError> {
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
    let stage_all = |staged: &mut Vec<(PathBuf, PathBuf)>| -> Result<(), PipelineError> {
        for (rel, bytes) in files {
            let path = if rel.is_absolute() { rel.clone() } else { out.join(rel) };
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir).map_err(io_err(dir))?;
            }
            let mut name = path.file_name().unwrap_or_default().to_os_string();
            name.push(".partial");
            let tmp = path.with_file_name(name);
            staged.push((tmp.clone(), path));
            let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
            f.write_all(bytes).map_err(io_err(&tmp))?;
            f.sync_all().map_err(io_err(&tmp))?;
        }
        Ok(())
    };
    if let Err(e) = stage_all(&mut staged) {
        for (tmp, _) in &staged {
            let _ = fs::remove_file(tmp);
        }
        return Err(e);
    }
    let mut done = Vec::new();
    for (tmp, path) in staged {
        fs::rename(&tmp, &path).map_err(io_err(&path))?;
        done.push(path);
    }
    Ok(done)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

struct KeyBuilder(Sha256);

impl KeyBuilder {
    fn new(stage: Stage) -> Self {
        let mut h = Sha256::new();
        h.update(concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).as_bytes());
        h.update(stage.name().as_bytes());
        Self(h)
    }

    fn bytes(&mut self, b: &[u8]) {
        self.0.update((b.len() as u64).to_le_bytes());
        self.0.update(b);
    }

    fn file(&mut self, p: &Path) -> Result<(), PipelineError> {
        let data = fs::read(p).map_err(io_err(p))?;
        self.bytes(p.to_string_lossy().as_bytes());
        self.bytes(&data);
        Ok(())
    }

    fn value(&mut self, v: serde_json::Value) {
        self.bytes(v.to_string().as_bytes());
    }

    fn finish(self) -> String {
        hex(&self.0.finalize())
    }
}

/// Hash of the input files and the config subset that feed `stage`.
fn stage_key(c: &PipelineConfig, stage: Stage) -> Result<String, PipelineError> {
    let mut k = KeyBuilder::new(stage);
    let out = &c.output_dir;
    match stage {
        Stage::Fetch => {
            // Always refetch: the remote archive is not content-addressable.
            k.bytes(&std::process::id().to_le_bytes());
            k.bytes(format!("{:?}", std::time::SystemTime::now()).as_bytes());
        }
        Stage::Ingest => {
            for p in c.corpus_inputs() {
                k.file(&p)?;
            }
            k.file(&c.lexicon.tickers)?;
            k.file(&c.lexicon.etfs)?;
            k.file(&c.lexicon.stopwords)?;
            if let Some(p) = &c.text_stopwords {
                k.file(p)?;
            }
            k.value(json!({
                "date_range": c.date_range,
                "min_score": c.min_score,
                "drop_deleted": c.drop_deleted,
                "attribution": c.toggles.attribution,
                "counting": c.toggles.counting,
                "keywords": c.keywords,
            }));
        }
        Stage::Aggregate => {
            k.file(&out.join(ACTIVITY_FILE))?;
            k.file(&c.lexicon.tickers)?;
            let mut prices: Vec<PathBuf> = fs::read_dir(&c.price_dir)
                .map_err(io_err(&c.price_dir))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect();
            prices.sort();
            for p in prices {
                k.file(&p)?;
            }
            k.value(json!({
                "date_range": c.date_range,
                "portfolio": c.portfolio,
                "tickers": c.tickers,
                "benchmark": c.benchmark,
                "windows": c.windows,
            }));
        }
        Stage::Backtest | Stage::Report => {
            k.file(&out.join(SUMMARY_FILE))?;
            let bench = out.join(BENCHMARK_FILE);
            if bench.is_file() {
                k.file(&bench)?;
            }
            k.value(json!({
                "strategies": c.strategy_specs(),
                "pre_hype_range": c.pre_hype_range,
                "date_range": c.date_range,
                "seed": c.seed,
                "trials": c.trials,
                "trading_days_only": c.toggles.trading_days_only,
                "formats": c.formats,
            }));
        }
        Stage::All => {}
    }
    Ok(k.finish())
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheRecord {
    key: String,
    outputs: Vec<PathBuf>,
}

fn cache_path(stage: Stage) -> PathBuf {
    Path::new(CACHE_DIR).join(format!("{}.json", stage.name()))
}

fn cache_hit(out: &Path, stage: Stage, key: &str) -> bool {
    let Ok(text) = fs::read_to_string(out.join(cache_path(stage))) else {
        return false;
    };
    let Ok(rec) = serde_json::from_str::<CacheRecord>(&text) else {
        return false;
    };
    rec.key == key
        && rec
            .outputs
            .iter()
            .all(|p| if p.is_absolute() { p.is_file() } else { out.join(p).is_file() })
}

fn store_cache(out: &Path, stage: Stage, key: &str, files: &Artifacts) -> Result<(), PipelineError> {
    let rec = CacheRecord {
        key: key.to_string(),
        outputs: files.keys().cloned().collect(),
    };
    let path = cache_path(stage);
    let text = serde_json::to_vec_pretty(&rec).expect("cache record serializes");
    commit(out, &BTreeMap::from([(path, text)])).map(|_| ())
}

fn fetch_stage(c: &PipelineConfig) -> Result<Artifacts, PipelineError> {
    let crawl = c.crawl_config()?;
    let output = c.fetch.as_ref().expect("validated").output.clone();
    let start = day_start_ts(c.date_range.start);
    let end = day_start_ts(c.date_range.end + Days::new(1));
    let records = crawl_archive(&crawl, start, end)?;
    info!("fetch: {} records", records.len());
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, &r).expect("json value serializes");
        buf.push(b'\n');
    }
    Ok(BTreeMap::from([(output, buf)]))
}

fn load_lexicon_from(c: &PipelineConfig) -> Result<crate::lexer::TickerLexicon, PipelineError> {
    let (lex, rep) = load_lexicon(&c.lexicon.tickers, &c.lexicon.etfs, &c.lexicon.stopwords)?;
    info!(
        "lexicon: {} tickers, {} funds, {} stop words, {} skipped",
        rep.tickers, rep.etfs, rep.stopwords, rep.skipped
    );
    Ok(lex)
}

fn ingest_stage(c: &PipelineConfig) -> Result<Artifacts, PipelineError> {
    let lexicon = load_lexicon_from(c)?;
    let mut records = Vec::new();
    for p in c.corpus_inputs() {
        let f = fs::File::open(&p).map_err(io_err(&p))?;
        let batch = read_json_lines(BufReader::new(f)).map_err(io_err(&p))?;
        for (line, e) in &batch.rejected {
            warn!("{}:{line}: {e}", p.display());
        }
        records.extend(batch.submissions);
    }
    let corpus = filter_corpus(
        records,
        &CorpusFilter {
            min_score: c.min_score,
            drop_deleted: c.drop_deleted,
            range: c.date_range,
        },
    );
    info!("ingest: {} submissions in {}", corpus.len(), c.date_range);
    let opts = AggregateOptions {
        attribution: c.toggles.attribution,
        counting: c.toggles.counting,
        keywords: c
            .keywords
            .as_ref()
            .map(KeywordMatcher::new)
            .unwrap_or_default(),
    };
    let activity = aggregate_activity(&corpus, &lexicon, &opts);
    let mut act_csv = Vec::new();
    activity
        .write_csv(&mut act_csv)
        .expect("in-memory write");

    let stopwords: HashSet<String> = match &c.text_stopwords {
        Some(p) => {
            let f = fs::File::open(p).map_err(io_err(p))?;
            read_word_list(BufReader::new(f))?
                .into_iter()
                .map(|w| w.to_lowercase())
                .collect()
        }
        None => HashSet::new(),
    };
    let stats = corpus_stats(&corpus, &stopwords);
    let engagement = engagement_profile(&corpus);
    let stats_json = json!({
        "submissions": corpus.len(),
        "range": corpus.range,
        "titles": stats.titles,
        "bodies": stats.bodies,
        "flair_ratios": engagement.flair_ratios,
        "flair_counts": engagement.flair_counts,
        "untagged": engagement.untagged_count,
        "weekday_hours": engagement.weekday_hours,
        "weekend_hours": engagement.weekend_hours,
    });
    let mut stats_bytes = serde_json::to_vec_pretty(&stats_json).expect("stats serialize");
    stats_bytes.push(b'\n');
    Ok(BTreeMap::from([
        (PathBuf::from(ACTIVITY_FILE), act_csv),
        (PathBuf::from(CORPUS_STATS_FILE), stats_bytes),
    ]))
}

fn read_activity(c: &PipelineConfig) -> Result<ActivityTable, PipelineError> {
    let p = c.output_dir.join(ACTIVITY_FILE);
    let f = fs::File::open(&p).map_err(io_err(&p))?;
    Ok(ActivityTable::read_csv(BufReader::new(f))?)
}

/// Price series over the date range, with look-back history when the file has it.
fn price_series(c: &PipelineConfig, ticker: &str) -> Result<PriceSeries<f64>, PipelineError> {
    let path = c.price_path(ticker);
    if !path.is_file() {
        return Err(PipelineError::MissingPrices {
            ticker: ticker.to_string(),
            path,
        });
    }
    let market = |source| PipelineError::Market {
        ticker: ticker.to_string(),
        source,
    };
    let raw = load_price_series::<f64>(&path).map_err(market)?;
    let (Some(first), Some(last)) = (raw.first(), raw.last()) else {
        return Err(market(MarketError::Format("no price rows".into())));
    };
    let history = (c.windows.moving_average + c.windows.week) as u64;
    let wanted = c.date_range.start - Days::new(history);
    let range = DateRange {
        start: wanted.max(first.date),
        end: c.date_range.end.max(last.date),
    };
    PriceSeries::build(ticker, &raw, range, c.windows).map_err(market)
}

fn aggregate_stage(c: &PipelineConfig) -> Result<Artifacts, PipelineError> {
    let lexicon = load_lexicon_from(c)?;
    let activity = read_activity(c)?;
    let windows = if c.portfolio.windows.is_empty() {
        vec![c.date_range]
    } else {
        c.portfolio.windows.clone()
    };
    let selection = select_portfolio(&activity, &windows, c.portfolio.k);
    let mut tickers: BTreeSet<String> = match &c.tickers {
        Some(t) => t.iter().map(|s| s.trim().to_ascii_uppercase()).collect(),
        None => selection.intersection.iter().cloned().collect(),
    };
    if let Some(b) = &c.benchmark {
        tickers.remove(b);
    }
    if tickers.is_empty() {
        return Err(PipelineError::Stage(
            "aggregate: the portfolio is empty (no ticker ranks in every window)".into(),
        ));
    }
    info!("aggregate: portfolio of {} tickers", tickers.len());

    let portfolio_json = json!({
        "k": c.portfolio.k,
        "windows": windows,
        "rankings": selection.rankings,
        "intersection": selection.intersection,
        "portfolio": tickers,
        "sectors": selection
            .rankings
            .iter()
            .map(|r| sector_distribution(&r.iter().map(|(s, _)| s).collect::<Vec<_>>(), &lexicon))
            .collect::<Vec<_>>(),
        "portfolio_sectors": sector_distribution(&tickers.iter().collect::<Vec<_>>(), &lexicon),
    });

    let restricted = ActivityTable {
        range: c.date_range,
        cells: activity.cells.clone(),
    };
    let mut series = BTreeMap::new();
    for t in &tickers {
        series.insert(t.clone(), price_series(c, t)?);
    }
    let daily = restricted.materialize(tickers.iter().map(String::as_str));
    let summaries = join_market(&daily, &series)?;
    let mut out = Artifacts::new();
    let mut buf = Vec::new();
    write_summaries_csv(&summaries, &mut buf).map_err(|e| PipelineError::Stage(e.to_string()))?;
    out.insert(PathBuf::from(SUMMARY_FILE), buf);

    if let Some(b) = &c.benchmark {
        let s = BTreeMap::from([(b.clone(), price_series(c, b)?)]);
        let daily = restricted.materialize([b.as_str()]);
        let bench = join_market(&daily, &s)?;
        let mut buf = Vec::new();
        write_summaries_csv(&bench, &mut buf).map_err(|e| PipelineError::Stage(e.to_string()))?;
        out.insert(PathBuf::from(BENCHMARK_FILE), buf);
    }
    let mut pj = serde_json::to_vec_pretty(&portfolio_json).expect("portfolio serializes");
    pj.push(b'\n');
    out.insert(PathBuf::from(PORTFOLIO_FILE), pj);
    Ok(out)
}

fn read_summaries(path: &Path) -> Result<SummaryTable<f64>, PipelineError> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    Ok(read_summaries_csv(BufReader::new(f))?)
}

fn rendered(tables: &[Table], dir: &str, formats: &[Format]) -> Artifacts {
    let mut out = Artifacts::new();
    for t in tables {
        for f in formats {
            let name = format!("{}.{}", t.name, f.extension());
            out.insert(Path::new(dir).join(name), t.render(*f).into_bytes());
        }
    }
    out
}

fn backtest_stage(c: &PipelineConfig) -> Result<Artifacts, PipelineError> {
    let table = read_summaries(&c.output_dir.join(SUMMARY_FILE))?;
    let mut tables = Vec::new();
    let mut seen = BTreeMap::new();
    for spec in c.strategy_specs() {
        let report = evaluate_strategy(&table, &spec)?;
        // Same kind twice (e.g. two ranges) gets a numeric suffix.
        let n = seen.entry(spec.kind.label()).or_insert(0u32);
        *n += 1;
        let mut main = report::report_table(&report);
        let mut tickers = report::ticker_table(&report);
        if *n > 1 {
            main.name = format!("{}_{}", main.name, n);
            tickers.name = format!("{}_{}", tickers.name, n);
        }
        tables.push(main);
        tables.push(tickers);
    }
    Ok(rendered(&tables, STRATEGY_DIR, &c.formats))
}

/// Evaluations behind the summary tables for one period.
struct PhaseReports {
    all: EvaluationReport<f64>,
    mention: EvaluationReport<f64>,
    buy: EvaluationReport<f64>,
    sell: EvaluationReport<f64>,
    equal: EvaluationReport<f64>,
    random: EvaluationReport<f64>,
    reactive: [EvaluationReport<f64>; 3],
    proactive: [EvaluationReport<f64>; 3],
}

fn phase_reports(
    c: &PipelineConfig,
    table: &SummaryTable<f64>,
) -> Result<PhaseReports, PipelineError> {
    let eval = |kind: StrategyKind| {
        let mut spec = StrategySpec::new(kind);
        spec.trading_days_only = c.toggles.trading_days_only;
        evaluate_strategy(table, &spec)
    };
    let per_x = |f: fn(Horizon) -> StrategyKind| -> Result<[EvaluationReport<f64>; 3], BacktestError> {
        Ok([eval(f(Horizon::Day))?, eval(f(Horizon::ThreeDays))?, eval(f(Horizon::Week))?])
    };
    Ok(PhaseReports {
        all: eval(StrategyKind::AllDays)?,
        mention: eval(StrategyKind::MentionDays)?,
        buy: eval(StrategyKind::BuySignalDays)?,
        sell: eval(StrategyKind::SellSignalDays)?,
        equal: eval(StrategyKind::EquallyDistributed {
            reference: SignalSide::Buy,
        })?,
        random: eval(StrategyKind::RandomlyDistributed {
            reference: SignalSide::Buy,
            seed: c.seed,
            trials: c.trials,
        })?,
        reactive: per_x(|x| StrategyKind::ReactiveBuy { x })?,
        proactive: per_x(|x| StrategyKind::ProactiveBuy { x })?,
    })
}

fn report_stage(c: &PipelineConfig) -> Result<Artifacts, PipelineError> {
    let full_table = restrict_range(&read_summaries(&c.output_dir.join(SUMMARY_FILE))?, &c.date_range);
    let bench_path = c.output_dir.join(BENCHMARK_FILE);
    let benchmark = match (&c.benchmark, bench_path.is_file()) {
        (Some(_), true) => {
            let t = restrict_range(&read_summaries(&bench_path)?, &c.date_range);
            Some(evaluate_strategy(&t, &StrategySpec::new(StrategyKind::AllDays))?)
        }
        _ => None,
    };
    let full = phase_reports(c, &full_table)?;
    let mut tables = vec![
        report::table4(benchmark.as_ref(), &full.all, &full.mention, &full.buy, &full.sell),
        report::table5(&full.buy, &full.equal, &full.random, &full.all),
        report::table6(&full.all, &full.mention, &full.buy, &full.sell, &full.equal, &full.random),
        report::table7(&full.all, &full.buy),
        report::table8(
            &full.all,
            &full.buy,
            [&full.reactive[0], &full.reactive[1], &full.reactive[2]],
            [&full.proactive[0], &full.proactive[1], &full.proactive[2]],
        ),
    ];
    let mut ma = Vec::new();
    for mode in [MaMode::AnyBelowMa, MaMode::AllBelowMa] {
        let mut spec = StrategySpec::new(StrategyKind::MaFilteredBuy { mode });
        spec.trading_days_only = c.toggles.trading_days_only;
        ma.push(evaluate_strategy(&full_table, &spec)?);
    }
    let mut ma_table = report::report_table(&ma[0]);
    ma_table.name = "ma_filtered_any".into();
    let mut ma_all = report::report_table(&ma[1]);
    ma_all.name = "ma_filtered_all".into();
    tables.push(ma_table);
    tables.push(ma_all);

    match c.pre_hype_range {
        Some(pre_range) => {
            let pre_table = restrict_range(&full_table, &pre_range);
            let pre = phase_reports(c, &pre_table)?;
            let full_label = c.date_range.to_string();
            let pre_label = pre_range.to_string();
            tables.push(report::table9(
                &full_label,
                (&full.all, &full.buy),
                &pre_label,
                (&pre.all, &pre.buy),
            ));
            // Positions of x = 1d and x = 1w in the per-x reports.
            let (d, w) = (0, 2);
            tables.push(report::table10(
                &full_label,
                PhaseSignals {
                    buy: &full.buy,
                    reactive: [&full.reactive[d], &full.reactive[w]],
                    proactive: [&full.proactive[d], &full.proactive[w]],
                },
                &pre_label,
                PhaseSignals {
                    buy: &pre.buy,
                    reactive: [&pre.reactive[d], &pre.reactive[w]],
                    proactive: [&pre.proactive[d], &pre.proactive[w]],
                },
            ));
        }
        None => info!("report: no pre_hype_range, skipping the period comparison tables"),
    }
    Ok(rendered(&tables, TABLE_DIR, &c.formats))
}

impl PipelineConfig {
    /// A config for a fixture written by [`crate::synthetic::write_fixture`] into `dir`, with
    /// paths relative to `dir` and outputs under `dir/out`.
    pub fn for_fixture(
        paths: &crate::synthetic::FixturePaths,
        dir: &Path,
        date_range: DateRange,
        pre_hype_range: Option<DateRange>,
    ) -> Self {
        let rel = |p: &Path| p.strip_prefix(dir).map(Path::to_path_buf).unwrap_or_else(|_| p.to_path_buf());
        Self {
            corpus_files: vec![rel(&paths.corpus)],
            lexicon: LexiconPaths {
                tickers: rel(&paths.ticker_table),
                etfs: rel(&paths.etf_list),
                stopwords: rel(&paths.ticker_stopwords),
            },
            text_stopwords: Some(rel(&paths.text_stopwords)),
            price_dir: rel(&paths.price_dir),
            output_dir: PathBuf::from("out"),
            date_range,
            pre_hype_range,
            portfolio: PortfolioConfig::default(),
            tickers: None,
            benchmark: None,
            strategies: None,
            seed: default_seed(),
            trials: default_trials(),
            windows: WindowLengths::default(),
            toggles: Toggles::default(),
            min_score: default_min_score(),
            drop_deleted: true,
            keywords: None,
            formats: default_formats(),
            fetch: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}
