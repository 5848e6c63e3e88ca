use std::thread;
use std::time::{Duration, Instant};

use serde_json::Value;

/// Settings for walking the archive backwards in time.
#[derive(Debug, Clone)]
pub struct CrawlConfig {
    pub endpoint: String,
    pub subreddit: String,
    pub page_size: u32,
    /// Minimum wait between the end of one request and the start of the next, retries included.
    pub min_interval: Duration,
    pub max_attempts: u32,
    /// Delay after the first failed attempt; doubles after each further failure.
    pub initial_backoff: Duration,
    pub timeout: Duration,
}

impl Default for CrawlConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.pushshift.io/reddit/search/submission".into(),
            subreddit: "wallstreetbets".into(),
            page_size: 100,
            min_interval: Duration::from_secs(1),
            max_attempts: 5,
            initial_backoff: Duration::from_secs(1),
            timeout: Duration::from_secs(30),
        }
    }
}

impl CrawlConfig {
    /// Sets the request spacing from a requests-per-second rate.
    pub fn with_rate_limit(mut self, requests_per_second: f64) -> Self {
        self.min_interval = if requests_per_second > 0.0 {
            Duration::from_secs_f64(1.0 / requests_per_second)
        } else {
            Duration::ZERO
        };
        self
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum FetchError {
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("cannot decode response: {0}")]
    Decode(String),
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CrawlError {
    #[error("end ({end}) must be after start ({start})")]
    EmptyWindow { start: i64, end: i64 },
    #[error("giving up after {attempts} attempts ({last_error}); resume with before={resume_before}")]
    Exhausted {
        attempts: u32,
        last_error: FetchError,
        /// `before` cursor of the request that failed; every record newer than it was emitted.
        resume_before: i64,
        emitted: u64,
    },
    #[error("cursor did not move back: page requested before={before} returned earliest {earliest}")]
    CursorLoop { before: i64, earliest: i64 },
}

/// One page of raw archive records.
#[derive(Debug, Clone, Default)]
pub struct ArchivePage {
    pub records: Vec<Value>,
}

/// Anything that can serve archive pages older than a cursor.
pub trait PageSource {
    fn fetch(&mut self, before: i64) -> Result<ArchivePage, FetchError>;
}

/// Archive API client: `GET endpoint?subreddit=..&before=..&size=..&score=>0`,
/// answering `{"data": [...]}`.
pub struct HttpArchive {
    agent: ureq::Agent,
    endpoint: String,
    subreddit: String,
    page_size: u32,
}

impl HttpArchive {
    pub fn new(config: &CrawlConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        Self {
            agent,
            endpoint: config.endpoint.clone(),
            subreddit: config.subreddit.clone(),
            page_size: config.page_size,
        }
    }
}

impl PageSource for HttpArchive {
    fn fetch(&mut self, before: i64) -> Result<ArchivePage, FetchError> {
        let mut response = self
            .agent
            .get(&self.endpoint)
            .query("subreddit", &self.subreddit)
            .query("before", before.to_string())
            .query("size", self.page_size.to_string())
            .query("score", ">0")
            .call()
            .map_err(|e| match e {
                ureq::Error::StatusCode(code) => FetchError::Status(code),
                other => FetchError::Transport(other.to_string()),
            })?;
        let body: Value = response
            .body_mut()
            .read_json()
            .map_err(|e| FetchError::Decode(e.to_string()))?;
        match body.get("data") {
            Some(Value::Array(records)) => Ok(ArchivePage {
                records: records.clone(),
            }),
            _ => Err(FetchError::Decode("response has no `data` array".into())),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CrawlSummary {
    pub requests: u64,
    pub emitted: u64,
    /// Records without a usable `created_utc`.
    pub skipped: u64,
    /// Cursor of the last page request.
    pub last_before: i64,
}

/// Sequential, rate-limited walk over a [`PageSource`].
pub struct Crawler<S> {
    source: S,
    config: CrawlConfig,
    last_request: Option<Instant>,
    requests: u64,
}

fn created_utc(record: &Value) -> Option<i64> {
    match record.get("created_utc")? {
        Value::Number(n) => n.as_i64().or_else(|| n.as_f64().map(|f| f as i64)),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

impl<S: PageSource> Crawler<S> {
    pub fn new(source: S, config: CrawlConfig) -> Self {
        Self {
            source,
            config,
            last_request: None,
            requests: 0,
        }
    }

    pub fn source(&self) -> &S {
        &self.source
    }

    pub fn into_source(self) -> S {
        self.source
    }

    /// Total requests issued so far, retries included.
    pub fn requests(&self) -> u64 {
        self.requests
    }

    /// Emits every record with `start <= created_utc < end`, newest first.
    pub fn run<F: FnMut(Value)>(
        &mut self,
        start: i64,
        end: i64,
        sink: F,
    ) -> Result<CrawlSummary, CrawlError> {
        if end <= start {
            return Err(CrawlError::EmptyWindow { start, end });
        }
        self.resume(start, end, sink)
    }

    /// Continues a crawl from a `before` cursor, e.g. the one reported by [`CrawlError::Exhausted`].
    pub fn resume<F: FnMut(Value)>(
        &mut self,
        start: i64,
        before: i64,
        mut sink: F,
    ) -> Result<CrawlSummary, CrawlError> {
        let mut summary = CrawlSummary {
            last_before: before,
            ..Default::default()
        };
        let mut cursor = before;
        loop {
            summary.last_before = cursor;
            let page = self.fetch_with_retry(cursor, &mut summary)?;
            let stamped: Vec<(Option<i64>, Value)> = page
                .records
                .into_iter()
                .map(|r| (created_utc(&r), r))
                .collect();
            let Some(earliest) = stamped.iter().filter_map(|(t, _)| *t).min() else {
                summary.skipped += stamped.len() as u64;
                return Ok(summary);
            };
            if earliest >= cursor {
                return Err(CrawlError::CursorLoop {
                    before: cursor,
                    earliest,
                });
            }
            for (t, record) in stamped {
                match t {
                    Some(t) if t >= start && t < cursor => {
                        summary.emitted += 1;
                        sink(record);
                    }
                    Some(_) => {}
                    None => summary.skipped += 1,
                }
            }
            if earliest < start {
                return Ok(summary);
            }
            cursor = earliest;
        }
    }

    fn fetch_with_retry(
        &mut self,
        before: i64,
        summary: &mut CrawlSummary,
    ) -> Result<ArchivePage, CrawlError> {
        let mut backoff = self.config.initial_backoff;
        let attempts = self.config.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            self.pace();
            summary.requests += 1;
            let result = self.source.fetch(before);
            // Pacing from completion bounds the spacing the server sees, even when
            // connection setup delays a request's arrival.
            self.last_request = Some(Instant::now());
            match result {
                Ok(page) => return Ok(page),
                Err(e) if attempt >= attempts => {
                    log::warn!("archive request before={before} failed permanently: {e}");
                    return Err(CrawlError::Exhausted {
                        attempts,
                        last_error: e,
                        resume_before: before,
                        emitted: summary.emitted,
                    });
                }
                Err(e) => {
                    log::debug!("archive request before={before} failed (attempt {attempt}): {e}");
                    thread::sleep(backoff);
                    backoff = backoff.saturating_mul(2);
                }
            }
        }
    }

    fn pace(&mut self) {
        if let Some(prev) = self.last_request {
            let elapsed = prev.elapsed();
            if elapsed < self.config.min_interval {
                thread::sleep(self.config.min_interval - elapsed);
            }
        }
        self.requests += 1;
    }
}

/// Crawls the configured HTTP archive for `[start, end)` and returns the records in fetched order.
pub fn crawl_archive(config: &CrawlConfig, start: i64, end: i64) -> Result<Vec<Value>, CrawlError> {
    let mut crawler = Crawler::new(HttpArchive::new(config), config.clone());
    let mut out = Vec::new();
    crawler.run(start, end, |r| out.push(r))?;
    Ok(out)
}
