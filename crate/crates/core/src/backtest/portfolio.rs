//! Most-discussed tickers per window and their sector mix.

use std::collections::{BTreeMap, BTreeSet};

use crate::dates::DateRange;
use crate::lexer::TickerLexicon;
use crate::signals::ActivityTable;

/// Sector label for tickers without sector metadata.
pub const UNKNOWN_SECTOR: &str = "unknown";

/// Top-`k` tickers by total mentions, descending, ties by symbol. Zero-mention tickers never rank.
pub fn rank_top_k(totals: &BTreeMap<String, u64>, k: usize) -> Vec<(String, u64)> {
    let mut ranked: Vec<(String, u64)> = totals
        .iter()
        .filter(|(_, &c)| c > 0)
        .map(|(t, &c)| (t.clone(), c))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortfolioSelection {
    pub windows: Vec<DateRange>,
    pub rankings: Vec<Vec<(String, u64)>>,
    /// Tickers present in every window's top-k.
    pub intersection: BTreeSet<String>,
}

pub fn select_portfolio(
    activity: &ActivityTable,
    windows: &[DateRange],
    k: usize,
) -> PortfolioSelection {
    let rankings: Vec<Vec<(String, u64)>> = windows
        .iter()
        .map(|w| rank_top_k(&activity.mention_totals(w), k))
        .collect();
    let intersection = intersect_rankings(&rankings);
    PortfolioSelection {
        windows: windows.to_vec(),
        rankings,
        intersection,
    }
}

pub fn intersect_rankings(rankings: &[Vec<(String, u64)>]) -> BTreeSet<String> {
    let mut iter = rankings
        .iter()
        .map(|r| r.iter().map(|(t, _)| t.clone()).collect::<BTreeSet<_>>());
    let Some(first) = iter.next() else {
        return BTreeSet::new();
    };
    iter.fold(first, |acc, s| acc.intersection(&s).cloned().collect())
}

/// Count of `tickers` per sector; missing metadata counts under [`UNKNOWN_SECTOR`].
pub fn sector_distribution<S: AsRef<str>>(
    tickers: &[S],
    lexicon: &TickerLexicon,
) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for t in tickers {
        let sector = lexicon.sector_of(t.as_ref()).unwrap_or(UNKNOWN_SECTOR);
        *out.entry(sector.to_string()).or_insert(0) += 1;
    }
    out
}
