use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::LabeledCorpus;
use crate::error::{Error, Result};

/// Token/index bijection with occurrence counts.
///
/// Indices are assigned by descending count; ties are broken by byte-wise
/// lexicographic token order, so the layout never depends on hash order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    index_to_token: Vec<String>,
    counts: Vec<usize>,
    min_count: usize,
    #[serde(skip)]
    token_to_index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds from `(token, count)` pairs, dropping tokens under `min_count`.
    pub fn from_counts(counts: HashMap<String, usize>, min_count: usize) -> Result<Self> {
        let mut entries: Vec<(String, usize)> =
            counts.into_iter().filter(|(_, c)| *c >= min_count.max(1)).collect();
        if entries.is_empty() {
            return Err(Error::EmptyVocabulary { min_count });
        }
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let (index_to_token, counts): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        let token_to_index = index_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Vocabulary {
            index_to_token,
            counts,
            min_count,
            token_to_index,
        })
    }

    pub fn len(&self) -> usize {
        self.index_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_to_token.is_empty()
    }

    pub fn index(&self, token: &str) -> Option<usize> {
        self.token_to_index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.index_to_token[index]
    }

    pub fn tokens(&self) -> &[String] {
        &self.index_to_token
    }

    pub fn count(&self, index: usize) -> usize {
        self.counts[index]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    /// Restores the lookup map after deserialization.
    pub fn reindex(&mut self) {
        self.token_to_index = self
            .index_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }
}

/// Counts tokens, builds the vocabulary and rewrites every record's `tokens`
/// as vocabulary indices (words under `min_count` are dropped).
pub fn build_vocabulary(corpus: &mut LabeledCorpus, min_count: usize) -> Result<Vocabulary> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for record in &corpus.records {
        for w in &record.words {
            *counts.entry(w.clone()).or_default() += 1;
        }
    }
    let vocab = Vocabulary::from_counts(counts, min_count)?;
    for record in &mut corpus.records {
        record.tokens = record.words.iter().filter_map(|w| vocab.index(w)).collect();
        if record.tokens.is_empty() {
            log::warn!("record {} has no in-vocabulary tokens", record.id);
        }
    }
    Ok(vocab)
}
