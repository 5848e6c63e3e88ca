//! Archived submission ingestion, filtering and corpus-level statistics.

mod crawl;
mod stats;
mod submission;

pub use crawl::{
    crawl_archive, ArchivePage, CrawlConfig, CrawlError, CrawlSummary, Crawler, FetchError,
    HttpArchive, PageSource,
};
pub use stats::{corpus_stats, engagement_profile, CorpusStats, EngagementProfile, TextStats};
pub use submission::{
    parse_submission_record, read_json_lines, submission_from_value, JsonLinesBatch, RecordError,
    SelfText, Submission,
};

use crate::dates::{utc_day, DateRange};

/// Filtered submissions in ascending `(created_utc, id)` order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub submissions: Vec<Submission>,
    pub range: DateRange,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.submissions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.submissions.is_empty()
    }
}

/// Selection criteria applied during ingestion.
#[derive(Debug, Clone, Copy)]
pub struct CorpusFilter {
    pub min_score: i64,
    pub drop_deleted: bool,
    pub range: DateRange,
}

/// Keeps submissions with `score >= min_score` whose UTC day lies in `range`, optionally
/// dropping deleted or removed posts, then sorts by timestamp with ties broken by id.
pub fn filter_corpus<I>(records: I, filter: &CorpusFilter) -> Corpus
where
    I: IntoIterator<Item = Submission>,
{
    let mut submissions: Vec<Submission> = records
        .into_iter()
        .filter(|s| s.score >= filter.min_score)
        .filter(|s| filter.range.contains(utc_day(s.created_utc)))
        .filter(|s| !(filter.drop_deleted && s.is_deleted()))
        .collect();
    submissions.sort_by(|a, b| {
        a.created_utc
            .cmp(&b.created_utc)
            .then_with(|| a.id.cmp(&b.id))
    });
    Corpus {
        submissions,
        range: filter.range,
    }
}
