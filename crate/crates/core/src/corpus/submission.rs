use std::io::BufRead;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Body text of a submission, keeping archive deletion markers distinguishable from real text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelfText {
    Absent,
    Empty,
    /// `[deleted]` marker.
    Deleted,
    /// `[removed]` marker.
    Removed,
    Present(String),
}

impl SelfText {
    pub fn from_raw(raw: Option<&str>) -> Self {
        match raw {
            None => SelfText::Absent,
            Some(s) if s.trim().is_empty() => SelfText::Empty,
            Some("[deleted]") => SelfText::Deleted,
            Some("[removed]") => SelfText::Removed,
            Some(s) => SelfText::Present(s.to_string()),
        }
    }

    pub fn is_sentinel(&self) -> bool {
        matches!(self, SelfText::Deleted | SelfText::Removed)
    }

    pub fn text(&self) -> Option<&str> {
        match self {
            SelfText::Present(s) => Some(s),
            _ => None,
        }
    }

    fn to_raw(&self) -> Option<&str> {
        match self {
            SelfText::Absent => None,
            SelfText::Empty => Some(""),
            SelfText::Deleted => Some("[deleted]"),
            SelfText::Removed => Some("[removed]"),
            SelfText::Present(s) => Some(s),
        }
    }
}

/// One archived top-level post.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Submission {
    pub id: String,
    pub created_utc: i64,
    pub title: String,
    pub selftext: SelfText,
    pub score: i64,
    pub flair: Option<String>,
    pub author: Option<String>,
    pub num_comments: u64,
}

impl Submission {
    /// Whether the archive marks this post as deleted by its author or removed by moderators.
    pub fn is_deleted(&self) -> bool {
        self.selftext.is_sentinel() || self.author.as_deref() == Some("[deleted]")
    }

    /// Title and body joined by a newline; the body only when it is real text.
    pub fn full_text(&self) -> String {
        match self.selftext.text() {
            Some(body) => format!("{}\n{}", self.title, body),
            None => self.title.clone(),
        }
    }

    /// Re-serializes to the archive record layout.
    pub fn to_record(&self) -> Value {
        let mut m = Map::new();
        m.insert("id".into(), Value::from(self.id.clone()));
        m.insert("created_utc".into(), Value::from(self.created_utc));
        m.insert("title".into(), Value::from(self.title.clone()));
        if let Some(s) = self.selftext.to_raw() {
            m.insert("selftext".into(), Value::from(s));
        }
        m.insert("score".into(), Value::from(self.score));
        if let Some(f) = &self.flair {
            m.insert("link_flair_text".into(), Value::from(f.clone()));
        }
        if let Some(a) = &self.author {
            m.insert("author".into(), Value::from(a.clone()));
        }
        m.insert("num_comments".into(), Value::from(self.num_comments));
        Value::Object(m)
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RecordError {
    #[error("malformed JSON at byte {offset}: {message}")]
    Malformed { offset: usize, message: String },
    #[error("record {} rejected: {reason}", id.as_deref().unwrap_or("<no id>"))]
    Rejected { id: Option<String>, reason: String },
}

/// Parses one archive record given as JSON text.
pub fn parse_submission_record(text: &str) -> Result<Submission, RecordError> {
    let value: Value = serde_json::from_str(text).map_err(|e| RecordError::Malformed {
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })?;
    submission_from_value(&value)
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    line_start + column.saturating_sub(1)
}

/// Maps an already-decoded archive record to a [`Submission`]; unknown fields are ignored.
pub fn submission_from_value(value: &Value) -> Result<Submission, RecordError> {
    let obj = value.as_object().ok_or_else(|| RecordError::Rejected {
        id: None,
        reason: "record is not a JSON object".into(),
    })?;
    let id = match obj.get("id") {
        Some(Value::String(s)) if !s.is_empty() => Some(s.clone()),
        Some(Value::Number(n)) => Some(n.to_string()),
        _ => None,
    };
    let reject = |reason: &str| RecordError::Rejected {
        id: id.clone(),
        reason: reason.to_string(),
    };
    let Some(id_value) = id.clone() else {
        return Err(reject("missing id"));
    };
    let created_utc = match obj.get("created_utc") {
        None | Some(Value::Null) => return Err(reject("missing created_utc")),
        Some(v) => integer_field(v).ok_or_else(|| reject("created_utc is not an integer timestamp"))?,
    };
    if created_utc <= 0 {
        return Err(reject("created_utc must be positive"));
    }
    let title = match obj.get("title") {
        Some(Value::String(s)) if !s.trim().is_empty() => s.clone(),
        Some(Value::String(_)) => return Err(reject("empty title")),
        _ => return Err(reject("missing title")),
    };
    let selftext = SelfText::from_raw(obj.get("selftext").and_then(Value::as_str));
    let score = obj.get("score").and_then(integer_field).unwrap_or(0);
    let flair = string_field(obj, "link_flair_text").or_else(|| string_field(obj, "flair"));
    let author = string_field(obj, "author");
    let num_comments = obj
        .get("num_comments")
        .and_then(integer_field)
        .map(|n| n.max(0) as u64)
        .unwrap_or(0);
    Ok(Submission {
        id: id_value,
        created_utc,
        title,
        selftext,
        score,
        flair,
        author,
        num_comments,
    })
}

fn string_field(obj: &Map<String, Value>, key: &str) -> Option<String> {
    obj.get(key)
        .and_then(Value::as_str)
        .filter(|s| !s.trim().is_empty())
        .map(str::to_string)
}

/// Accepts integers, integral floats (`1546300800.0`) and numeric strings.
fn integer_field(v: &Value) -> Option<i64> {
    match v {
        Value::Number(n) => n.as_i64().or_else(|| {
            n.as_f64()
                .filter(|f| f.fract() == 0.0 && f.abs() < 9.0e15)
                .map(|f| f as i64)
        }),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// Outcome of reading a JSON-lines file: accepted submissions plus per-line rejections.
#[derive(Debug, Default)]
pub struct JsonLinesBatch {
    pub submissions: Vec<Submission>,
    pub rejected: Vec<(usize, RecordError)>,
}

/// Reads one submission per non-blank line. Byte offsets in `Malformed` errors are file offsets.
pub fn read_json_lines<R: BufRead>(reader: R) -> std::io::Result<JsonLinesBatch> {
    let mut batch = JsonLinesBatch::default();
    let mut offset = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if !line.trim().is_empty() {
            match parse_submission_record(&line) {
                Ok(s) => batch.submissions.push(s),
                Err(RecordError::Malformed { offset: o, message }) => batch.rejected.push((
                    line_no,
                    RecordError::Malformed {
                        offset: offset + o,
                        message,
                    },
                )),
                Err(e) => batch.rejected.push((line_no, e)),
            }
        }
        offset += line.len() + 1;
    }
    Ok(batch)
}
