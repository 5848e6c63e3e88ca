use std::collections::{BTreeMap, HashSet};

use chrono::{DateTime, Timelike};
use serde::Serialize;

use super::Corpus;
use crate::dates::{is_weekend, utc_day};
use crate::lexer::strip_edge_punctuation;

/// Word/character statistics for one family of texts (titles or bodies).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TextStats {
    pub word_count_incl_sw: u64,
    pub word_count_excl_sw: u64,
    pub char_count_incl_sw: u64,
    pub char_count_excl_sw: u64,
    pub avg_text_length_incl_sw: f64,
    pub avg_text_length_excl_sw: f64,
    pub vocabulary_size: u64,
    pub text_count: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CorpusStats {
    pub titles: TextStats,
    pub bodies: TextStats,
}

#[derive(Default)]
struct Accumulator {
    stats: TextStats,
    vocabulary: HashSet<String>,
}

impl Accumulator {
    fn add(&mut self, text: &str, stopwords: &HashSet<String>) {
        self.stats.text_count += 1;
        for word in text
            .split_whitespace()
            .map(strip_edge_punctuation)
            .filter(|w| !w.is_empty())
        {
            let chars = word.chars().count() as u64;
            self.stats.word_count_incl_sw += 1;
            self.stats.char_count_incl_sw += chars;
            let lower = word.to_lowercase();
            if !stopwords.contains(&lower) {
                self.stats.word_count_excl_sw += 1;
                self.stats.char_count_excl_sw += chars;
                self.vocabulary.insert(lower);
            }
        }
    }

    fn finish(mut self) -> TextStats {
        self.stats.vocabulary_size = self.vocabulary.len() as u64;
        if self.stats.text_count > 0 {
            let n = self.stats.text_count as f64;
            self.stats.avg_text_length_incl_sw = self.stats.word_count_incl_sw as f64 / n;
            self.stats.avg_text_length_excl_sw = self.stats.word_count_excl_sw as f64 / n;
        }
        self.stats
    }
}

/// Word, character and vocabulary statistics for titles and for real body texts.
///
/// Words are whitespace-delimited tokens with edge punctuation stripped; stop-word
/// membership and vocabulary use the lowercased word. `stopwords` must be lowercase.
pub fn corpus_stats(corpus: &Corpus, stopwords: &HashSet<String>) -> CorpusStats {
    let mut titles = Accumulator::default();
    let mut bodies = Accumulator::default();
    for s in &corpus.submissions {
        titles.add(&s.title, stopwords);
        if let Some(body) = s.selftext.text() {
            bodies.add(body, stopwords);
        }
    }
    CorpusStats {
        titles: titles.finish(),
        bodies: bodies.finish(),
    }
}

/// Flair shares and hourly posting activity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngagementProfile {
    /// Share of each flair among tagged submissions.
    pub flair_ratios: BTreeMap<String, f64>,
    pub flair_counts: BTreeMap<String, u64>,
    pub untagged_count: u64,
    /// Posts per UTC hour on Monday–Friday.
    pub weekday_hours: [u64; 24],
    /// Posts per UTC hour on Saturday and Sunday.
    pub weekend_hours: [u64; 24],
}

impl EngagementProfile {
    pub fn weekday_peak(&self) -> Option<usize> {
        peak(&self.weekday_hours)
    }

    pub fn weekend_peak(&self) -> Option<usize> {
        peak(&self.weekend_hours)
    }
}

fn peak(hist: &[u64; 24]) -> Option<usize> {
    let max = *hist.iter().max()?;
    (max > 0).then(|| hist.iter().position(|&c| c == max).unwrap_or(0))
}

pub fn engagement_profile(corpus: &Corpus) -> EngagementProfile {
    let mut flair_counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut untagged_count = 0;
    let mut weekday_hours = [0u64; 24];
    let mut weekend_hours = [0u64; 24];
    for s in &corpus.submissions {
        match &s.flair {
            Some(f) => *flair_counts.entry(f.clone()).or_default() += 1,
            None => untagged_count += 1,
        }
        let hour = DateTime::from_timestamp(s.created_utc, 0)
            .map(|dt| dt.hour() as usize)
            .unwrap_or(0);
        if is_weekend(utc_day(s.created_utc)) {
            weekend_hours[hour] += 1;
        } else {
            weekday_hours[hour] += 1;
        }
    }
    let tagged: u64 = flair_counts.values().sum();
    let flair_ratios = flair_counts
        .iter()
        .map(|(k, &v)| (k.clone(), v as f64 / tagged as f64))
        .collect();
    EngagementProfile {
        flair_ratios,
        flair_counts,
        untagged_count,
        weekday_hours,
        weekend_hours,
    }
}
