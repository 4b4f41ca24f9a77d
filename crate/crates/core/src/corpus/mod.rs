//! Labeled corpus ingestion, tokenization, vocabulary and cross-validation folds.

mod folds;
mod load;
mod tokenize;
mod vocab;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use folds::{make_folds, FoldPlan, FoldSplit};
pub use load::{load_corpus, parse_corpus, CorpusFormat};
pub use tokenize::tokenize;
pub use vocab::{build_vocabulary, Vocabulary};

/// Classification tasks a sentence may be labeled for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Sentiment analysis.
    Sa,
    /// Emotion identification.
    Ei,
    /// Hate speech.
    Hs,
    /// Sarcasm.
    Sar,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Sa, Task::Ei, Task::Hs, Task::Sar];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn n_classes(self) -> usize {
        match self {
            Task::Ei => 4,
            _ => 2,
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Task::Sa => "sa",
            Task::Ei => "ei",
            Task::Hs => "hs",
            Task::Sar => "sar",
        }
    }

    pub fn class_names(self) -> &'static [&'static str] {
        match self {
            Task::Sa => &["Negative", "Positive"],
            Task::Ei => &["Fear", "Angry", "Sad", "Happy"],
            Task::Hs | Task::Sar => &["No", "Yes"],
        }
    }

    /// Parses a comma separated task list such as `sa,ei`.
    pub fn parse_list(s: &str) -> Result<Vec<Task>> {
        let mut tasks: Vec<Task> = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(Task::from_str)
            .collect::<Result<_>>()?;
        tasks.sort();
        tasks.dedup();
        Ok(tasks)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.key())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sa" => Ok(Task::Sa),
            "ei" => Ok(Task::Ei),
            "hs" => Ok(Task::Hs),
            "sar" => Ok(Task::Sar),
            other => Err(Error::InvalidArgument(format!("unknown task {other:?}"))),
        }
    }
}

/// Per-task optional class labels. Absence is explicit and never class 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels([Option<usize>; 4]);

impl Labels {
    pub fn get(&self, task: Task) -> Option<usize> {
        self.0[task.index()]
    }

    pub fn set(&mut self, task: Task, label: Option<usize>) {
        if let Some(l) = label {
            assert!(l < task.n_classes(), "label {l} out of range for {task}");
        }
        self.0[task.index()] = label;
    }

    pub fn with(mut self, task: Task, label: usize) -> Self {
        self.set(task, Some(label));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: usize,
    pub text: String,
    /// Whitespace tokens of the normalized text.
    pub words: Vec<String>,
    /// Vocabulary indices of `words` that survived `min_count`; empty until a
    /// vocabulary is applied.
    pub tokens: Vec<usize>,
    pub labels: Labels,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabeledCorpus {
    pub records: Vec<SentenceRecord>,
}

impl LabeledCorpus {
    /// Builds a corpus from raw texts and labels; ids follow input order.
    pub fn from_texts<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = (S, Labels)>,
        S: Into<String>,
    {
        let records = items
            .into_iter()
            .enumerate()
            .map(|(id, (text, labels))| {
                let text: String = text.into();
                SentenceRecord {
                    id,
                    words: tokenize(&text),
                    text,
                    tokens: Vec::new(),
                    labels,
                }
            })
            .collect();
        LabeledCorpus { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labeled_count(&self, task: Task) -> usize {
        self.records.iter().filter(|r| r.labels.get(task).is_some()).count()
    }

    /// Token index sequences, one per record.
    pub fn token_lists(&self) -> impl Iterator<Item = &[usize]> {
        self.records.iter().map(|r| r.tokens.as_slice())
    }
}
