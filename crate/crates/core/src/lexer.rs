//! Ticker and transaction-keyword detection.
//!
//! A token is a ticker mention when either
//! * it is 2–5 uppercase ASCII letters, listed in the lexicon and not a ticker stop word, or
//! * it is `$` followed by 1–5 uppercase ASCII letters, whether listed or not.
//!
//! Bare single letters never count, and `$1000` or `$Gme` are not mentions.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Characters removed from token edges before matching.
pub const EDGE_PUNCTUATION: &[char] = &[
    '.', ',', ';', ':', '!', '?', '(', ')', '[', ']', '{', '}', '"', '\'',
];

pub fn strip_edge_punctuation(token: &str) -> &str {
    token.trim_matches(EDGE_PUNCTUATION)
}

/// Splits on whitespace and strips edge punctuation; empty tokens are dropped.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split_whitespace()
        .map(strip_edge_punctuation)
        .filter(|t| !t.is_empty())
        .collect()
}

fn is_upper_alpha(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_uppercase())
}

/// Valid symbol shape: 1–5 uppercase ASCII letters.
pub fn is_valid_symbol(s: &str) -> bool {
    (1..=5).contains(&s.len()) && is_upper_alpha(s)
}

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("ticker table: {0}")]
    Csv(#[from] csv::Error),
    #[error("ticker table is missing column `{0}`")]
    MissingColumn(&'static str),
    #[error("lexicon contains no valid tickers")]
    NoTickers,
}

/// Known symbols, ticker stop words and sector metadata.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TickerLexicon {
    known: BTreeSet<String>,
    stopwords: BTreeSet<String>,
    sector_of: HashMap<String, String>,
    name_of: HashMap<String, String>,
}

/// Row counts from loading a lexicon.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LexiconLoadReport {
    pub tickers: usize,
    pub etfs: usize,
    pub stopwords: usize,
    /// Rows or lines skipped because the symbol was not 1–5 letters.
    pub skipped: usize,
}

impl TickerLexicon {
    /// Builds a lexicon from symbol lists; entries are uppercased and invalid ones dropped.
    pub fn new<I, J, S, T>(known: I, stopwords: J) -> Self
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let norm = |s: &str| s.trim().to_ascii_uppercase();
        Self {
            known: known
                .into_iter()
                .map(|s| norm(s.as_ref()))
                .filter(|s| is_valid_symbol(s))
                .collect(),
            stopwords: stopwords
                .into_iter()
                .map(|s| norm(s.as_ref()))
                .filter(|s| !s.is_empty())
                .collect(),
            sector_of: HashMap::new(),
            name_of: HashMap::new(),
        }
    }

    pub fn with_sector(mut self, symbol: &str, sector: &str) -> Self {
        self.sector_of
            .insert(symbol.to_ascii_uppercase(), sector.to_string());
        self
    }

    /// Listed and not excluded by a stop word.
    pub fn is_known(&self, symbol: &str) -> bool {
        self.known.contains(symbol) && !self.stopwords.contains(symbol)
    }

    pub fn is_stopword(&self, symbol: &str) -> bool {
        self.stopwords.contains(symbol)
    }

    pub fn sector_of(&self, symbol: &str) -> Option<&str> {
        self.sector_of.get(symbol).map(String::as_str)
    }

    pub fn name_of(&self, symbol: &str) -> Option<&str> {
        self.name_of.get(symbol).map(String::as_str)
    }

    /// Effective symbols (listed minus stop words), sorted.
    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.known
            .iter()
            .filter(|s| !self.stopwords.contains(*s))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.symbols().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Loads from readers: a `symbol,name,sector` CSV, an ETF list and a ticker stop-word list.
    pub fn from_readers<A: Read, B: BufRead, C: BufRead>(
        ticker_table: A,
        etf_list: B,
        stopword_list: C,
    ) -> Result<(Self, LexiconLoadReport), LexiconError> {
        let mut lex = TickerLexicon::default();
        let mut report = LexiconLoadReport::default();

        let mut rdr = csv::ReaderBuilder::new()
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(ticker_table);
        let headers = rdr.headers()?.clone();
        let col = |name: &'static str| {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or(LexiconError::MissingColumn(name))
        };
        let symbol_col = col("symbol")?;
        let name_col = col("name").ok();
        let sector_col = col("sector").ok();
        for row in rdr.records() {
            let row = row?;
            let symbol = row.get(symbol_col).unwrap_or("").to_ascii_uppercase();
            if !is_valid_symbol(&symbol) {
                report.skipped += 1;
                continue;
            }
            let field = |c: Option<usize>| c.and_then(|c| row.get(c)).filter(|v| !v.is_empty());
            if let Some(sector) = field(sector_col) {
                lex.sector_of.insert(symbol.clone(), sector.to_string());
            }
            if let Some(name) = field(name_col) {
                lex.name_of.insert(symbol.clone(), name.to_string());
            }
            if lex.known.insert(symbol) {
                report.tickers += 1;
            }
        }

        for symbol in read_word_list(etf_list)? {
            let symbol = symbol.to_ascii_uppercase();
            if !is_valid_symbol(&symbol) {
                report.skipped += 1;
            } else if lex.known.insert(symbol) {
                report.etfs += 1;
            }
        }
        for word in read_word_list(stopword_list)? {
            if lex.stopwords.insert(word.to_ascii_uppercase()) {
                report.stopwords += 1;
            }
        }
        if lex.is_empty() {
            return Err(LexiconError::NoTickers);
        }
        if report.skipped > 0 {
            log::warn!("skipped {} invalid lexicon entries", report.skipped);
        }
        Ok((lex, report))
    }
}

/// Loads a lexicon from its three files.
pub fn load_lexicon(
    ticker_table: &Path,
    etf_list: &Path,
    stopword_list: &Path,
) -> Result<(TickerLexicon, LexiconLoadReport), LexiconError> {
    let open = |p: &Path| {
        File::open(p).map_err(|source| LexiconError::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    let table = open(ticker_table)?;
    let etfs = BufReader::new(open(etf_list)?);
    let stops = BufReader::new(open(stopword_list)?);
    TickerLexicon::from_readers(table, etfs, stops).map_err(|e| match e {
        LexiconError::Io { source, .. } => LexiconError::Io {
            path: ticker_table.to_path_buf(),
            source,
        },
        other => other,
    })
}

/// One entry per line; blank lines and `#` comments ignored.
pub fn read_word_list<R: BufRead>(reader: R) -> Result<Vec<String>, LexiconError> {
    let mut words = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|source| LexiconError::Io {
            path: PathBuf::from("<word list>"),
            source,
        })?;
        let entry = line.split('#').next().unwrap_or("").trim();
        if !entry.is_empty() {
            words.push(entry.to_string());
        }
    }
    Ok(words)
}

/// A detected ticker occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TickerMention {
    pub symbol: String,
    pub dollar_prefixed: bool,
    /// Position in the [`tokenize`] output.
    pub token_index: usize,
}

/// Classifies one already-tokenized token.
pub fn match_token(token: &str, lexicon: &TickerLexicon) -> Option<(String, bool)> {
    if let Some(rest) = token.strip_prefix('$') {
        return is_valid_symbol(rest).then(|| (rest.to_string(), true));
    }
    ((2..=5).contains(&token.len()) && is_upper_alpha(token) && lexicon.is_known(token))
        .then(|| (token.to_string(), false))
}

/// Every ticker occurrence in `text`, in token order.
pub fn detect_tickers(text: &str, lexicon: &TickerLexicon) -> Vec<TickerMention> {
    tokenize(text)
        .into_iter()
        .enumerate()
        .filter_map(|(token_index, tok)| {
            match_token(tok, lexicon).map(|(symbol, dollar_prefixed)| TickerMention {
                symbol,
                dollar_prefixed,
                token_index,
            })
        })
        .collect()
}

/// Counts of transaction-related words in a text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TransactionCounts {
    pub buy: u32,
    pub hold: u32,
    pub sell: u32,
    pub call: u32,
    pub put: u32,
}

impl std::ops::AddAssign for TransactionCounts {
    fn add_assign(&mut self, o: Self) {
        self.buy += o.buy;
        self.hold += o.hold;
        self.sell += o.sell;
        self.call += o.call;
        self.put += o.put;
    }
}

impl std::ops::Add for TransactionCounts {
    type Output = Self;

    fn add(mut self, o: Self) -> Self {
        self += o;
        self
    }
}

impl TransactionCounts {
    pub fn is_zero(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Keyword {
    Buy,
    Hold,
    Sell,
    Call,
    Put,
}

/// Word forms folded onto each transaction keyword, lowercase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct KeywordTable {
    pub buy: Vec<String>,
    pub hold: Vec<String>,
    pub sell: Vec<String>,
    pub call: Vec<String>,
    pub put: Vec<String>,
}

impl Default for KeywordTable {
    fn default() -> Self {
        let v = |w: &[&str]| w.iter().map(|s| s.to_string()).collect();
        Self {
            buy: v(&["buy", "buys", "buying", "bought"]),
            hold: v(&["hold", "holds", "holding", "held"]),
            sell: v(&["sell", "sells", "selling", "sold"]),
            call: v(&["call", "calls"]),
            put: v(&["put", "puts"]),
        }
    }
}

/// Compiled [`KeywordTable`] for lookups.
#[derive(Debug, Clone)]
pub struct KeywordMatcher {
    forms: HashMap<String, Keyword>,
}

impl Default for KeywordMatcher {
    fn default() -> Self {
        Self::new(&KeywordTable::default())
    }
}

impl KeywordMatcher {
    pub fn new(table: &KeywordTable) -> Self {
        let mut forms = HashMap::new();
        for (words, kw) in [
            (&table.buy, Keyword::Buy),
            (&table.hold, Keyword::Hold),
            (&table.sell, Keyword::Sell),
            (&table.call, Keyword::Call),
            (&table.put, Keyword::Put),
        ] {
            for w in words {
                forms.insert(w.to_lowercase(), kw);
            }
        }
        Self { forms }
    }

    /// Whole-token, case-insensitive counts.
    pub fn count(&self, text: &str) -> TransactionCounts {
        let mut c = TransactionCounts::default();
        for tok in tokenize(text) {
            let hit = if tok.bytes().all(|b| !b.is_ascii_uppercase()) {
                self.forms.get(tok)
            } else {
                self.forms.get(&tok.to_lowercase())
            };
            match hit {
                Some(Keyword::Buy) => c.buy += 1,
                Some(Keyword::Hold) => c.hold += 1,
                Some(Keyword::Sell) => c.sell += 1,
                Some(Keyword::Call) => c.call += 1,
                Some(Keyword::Put) => c.put += 1,
                None => {}
            }
        }
        c
    }
}

/// Counts transaction words with the default keyword table.
pub fn count_transaction_words(text: &str) -> TransactionCounts {
    KeywordMatcher::default().count(text)
}

/// Mention tally per symbol for a text.
pub fn mention_counts(mentions: &[TickerMention]) -> BTreeMap<&str, u32> {
    let mut out = BTreeMap::new();
    for m in mentions {
        *out.entry(m.symbol.as_str()).or_insert(0) += 1;
    }
    out
}
