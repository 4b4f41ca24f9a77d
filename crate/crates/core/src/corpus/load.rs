use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde_json::Value;

use super::{tokenize, Labels, LabeledCorpus, SentenceRecord, Task};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Tsv,
}

impl CorpusFormat {
    /// Guesses the format from a file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("tab") => CorpusFormat::Tsv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "tsv" => Ok(CorpusFormat::Tsv),
            other => Err(Error::InvalidArgument(format!("unknown corpus format {other:?}"))),
        }
    }
}

/// Reads a labeled corpus, one record per non-blank line.
pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<LabeledCorpus> {
    let content = fs::read_to_string(path)?;
    parse_corpus(&content, format)
}

pub fn parse_corpus(content: &str, format: CorpusFormat) -> Result<LabeledCorpus> {
    let mut records = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = match format {
            CorpusFormat::Jsonl => parse_json_line(line, line_no)?,
            CorpusFormat::Tsv => {
                if records.is_empty() && is_tsv_header(line) {
                    continue;
                }
                parse_tsv_line(line, line_no)?
            }
        };
        let (text, labels) = parsed;
        let words = tokenize(&text);
        if words.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "text has no tokens".into(),
            });
        }
        records.push(SentenceRecord {
            id: records.len(),
            text,
            words,
            tokens: Vec::new(),
            labels,
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(LabeledCorpus { records })
}

fn parse_json_line(line: &str, line_no: usize) -> Result<(String, Labels)> {
    let value: Value = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| Error::Parse {
        line: line_no,
        message: "expected a JSON object".into(),
    })?;
    let text = obj
        .get("text")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Parse {
            line: line_no,
            message: "missing string field `text`".into(),
        })?
        .to_owned();
    let mut labels = Labels::default();
    for task in Task::ALL {
        let label = match obj.get(task.key()) {
            None | Some(Value::Null) => None,
            Some(Value::Number(n)) => Some(parse_label(task, &n.to_string(), line_no)?),
            Some(Value::String(s)) => parse_optional_label(task, s, line_no)?,
            Some(other) => {
                return Err(Error::UnknownLabel {
                    line: line_no,
                    task: task.key().into(),
                    value: other.to_string(),
                })
            }
        };
        labels.set(task, label);
    }
    Ok((text, labels))
}

fn is_tsv_header(line: &str) -> bool {
    line.split('\t').next().map(str::trim) == Some("text")
}

fn parse_tsv_line(line: &str, line_no: usize) -> Result<(String, Labels)> {
    let cells: Vec<&str> = line.split('\t').collect();
    if cells.len() > 5 {
        return Err(Error::Parse {
            line: line_no,
            message: format!("expected at most 5 columns, found {}", cells.len()),
        });
    }
    let mut labels = Labels::default();
    for (task, cell) in Task::ALL.iter().zip(cells.iter().skip(1)) {
        labels.set(*task, parse_optional_label(*task, cell, line_no)?);
    }
    Ok((cells[0].to_owned(), labels))
}

fn parse_optional_label(task: Task, raw: &str, line_no: usize) -> Result<Option<usize>> {
    let raw = raw.trim();
    if raw.is_empty() || raw.eq_ignore_ascii_case("null") {
        return Ok(None);
    }
    parse_label(task, raw, line_no).map(Some)
}

/// Accepts a class index or a class name (case-insensitive).
fn parse_label(task: Task, raw: &str, line_no: usize) -> Result<usize> {
    let unknown = || Error::UnknownLabel {
        line: line_no,
        task: task.key().into(),
        value: raw.into(),
    };
    if let Ok(idx) = raw.parse::<usize>() {
        return if idx < task.n_classes() { Ok(idx) } else { Err(unknown()) };
    }
    task.class_names()
        .iter()
        .position(|name| name.eq_ignore_ascii_case(raw))
        .ok_or_else(unknown)
}
