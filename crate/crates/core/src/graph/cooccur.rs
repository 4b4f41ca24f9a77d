use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledCorpus, Vocabulary};
use crate::error::{Error, Result};

/// Sliding-window co-occurrence statistics over a tokenized corpus.
///
/// A window "contains" a word if the word occurs at least once in it, and a
/// window contributes at most once to each word pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooccurrenceTable {
    pub window_size: usize,
    /// `#W`, the number of windows.
    pub total_windows: u64,
    /// `#W(i)` per vocabulary index.
    pub word_window_counts: Vec<u64>,
    /// `#W(i, j)` keyed by `(i, j)` with `i < j`; zero counts are not stored.
    pub pair_window_counts: BTreeMap<(usize, usize), u64>,
}

impl CooccurrenceTable {
    fn empty(window_size: usize, vocab_size: usize) -> Self {
        CooccurrenceTable {
            window_size,
            total_windows: 0,
            word_window_counts: vec![0; vocab_size],
            pair_window_counts: BTreeMap::new(),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.word_window_counts.len()
    }

    pub fn pair_count(&self, i: usize, j: usize) -> u64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.pair_window_counts.get(&key).copied().unwrap_or(0)
    }

    fn add_sentence(&mut self, tokens: &[usize], window: &mut Vec<usize>) {
        if tokens.is_empty() {
            return;
        }
        let width = self.window_size.min(tokens.len());
        for span in tokens.windows(width) {
            window.clear();
            window.extend_from_slice(span);
            window.sort_unstable();
            window.dedup();
            self.total_windows += 1;
            for (a, &i) in window.iter().enumerate() {
                self.word_window_counts[i] += 1;
                for &j in &window[a + 1..] {
                    *self.pair_window_counts.entry((i, j)).or_default() += 1;
                }
            }
        }
    }

    /// Adds another table's counts. Both must share window size and vocabulary.
    pub fn merge(&mut self, other: &CooccurrenceTable) {
        debug_assert_eq!(self.window_size, other.window_size);
        debug_assert_eq!(self.vocab_size(), other.vocab_size());
        self.total_windows += other.total_windows;
        for (a, b) in self.word_window_counts.iter_mut().zip(&other.word_window_counts) {
            *a += b;
        }
        for (k, v) in &other.pair_window_counts {
            *self.pair_window_counts.entry(*k).or_default() += v;
        }
    }
}

/// Counts windows sentence by sentence; windows never cross sentence boundaries.
pub fn count_cooccurrence(
    corpus: &LabeledCorpus,
    vocab: &Vocabulary,
    window_size: usize,
) -> Result<CooccurrenceTable> {
    check_window(window_size)?;
    let mut table = CooccurrenceTable::empty(window_size, vocab.len());
    let mut scratch = Vec::with_capacity(window_size);
    for tokens in corpus.token_lists() {
        table.add_sentence(tokens, &mut scratch);
    }
    Ok(table)
}

/// Same result as [`count_cooccurrence`], with sentences sharded over the
/// rayon pool and per-shard tables merged in shard order.
pub fn count_cooccurrence_sharded(
    corpus: &LabeledCorpus,
    vocab: &Vocabulary,
    window_size: usize,
    shard_size: usize,
) -> Result<CooccurrenceTable> {
    check_window(window_size)?;
    let shard_size = shard_size.max(1);
    let shards: Vec<CooccurrenceTable> = corpus
        .records
        .par_chunks(shard_size)
        .map(|chunk| {
            let mut t = CooccurrenceTable::empty(window_size, vocab.len());
            let mut scratch = Vec::with_capacity(window_size);
            for r in chunk {
                t.add_sentence(&r.tokens, &mut scratch);
            }
            t
        })
        .collect();
    let mut table = CooccurrenceTable::empty(window_size, vocab.len());
    for shard in &shards {
        table.merge(shard);
    }
    Ok(table)
}

fn check_window(window_size: usize) -> Result<()> {
    if window_size == 0 {
        return Err(Error::InvalidArgument("window_size must be at least 1".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, Labels};

    fn setup(texts: &[&str]) -> (LabeledCorpus, Vocabulary) {
        let mut c = LabeledCorpus::from_texts(texts.iter().map(|t| (*t, Labels::default())));
        let v = build_vocabulary(&mut c, 1).unwrap();
        (c, v)
    }

    #[test]
    fn short_sentence_is_one_window() {
        let (c, v) = setup(&["a b"]);
        let t = count_cooccurrence(&c, &v, 3).unwrap();
        let (a, b) = (v.index("a").unwrap(), v.index("b").unwrap());
        assert_eq!(t.total_windows, 1);
        assert_eq!(t.word_window_counts[a], 1);
        assert_eq!(t.word_window_counts[b], 1);
        assert_eq!(t.pair_count(a, b), 1);
    }

    #[test]
    fn four_tokens_window_three() {
        let (c, v) = setup(&["a b c d"]);
        let t = count_cooccurrence(&c, &v, 3).unwrap();
        let id = |s| v.index(s).unwrap();
        assert_eq!(t.total_windows, 2);
        assert_eq!(t.word_window_counts[id("b")], 2);
        assert_eq!(t.word_window_counts[id("a")], 1);
        assert_eq!(t.pair_count(id("a"), id("d")), 0);
        assert_eq!(t.pair_count(id("b"), id("c")), 2);
    }

    #[test]
    fn repeated_word_counts_once_per_window() {
        let (c, v) = setup(&["a a b"]);
        let t = count_cooccurrence(&c, &v, 3).unwrap();
        assert_eq!(t.word_window_counts[v.index("a").unwrap()], 1);
        assert_eq!(t.pair_count(0, 1), 1);
        assert!(t.pair_window_counts.keys().all(|(i, j)| i < j));
    }

    #[test]
    fn windows_do_not_cross_sentences() {
        let (c, v) = setup(&["a", "b"]);
        let t = count_cooccurrence(&c, &v, 3).unwrap();
        assert_eq!(t.total_windows, 2);
        assert!(t.pair_window_counts.is_empty());
    }

    #[test]
    fn zero_window_rejected() {
        let (c, v) = setup(&["a"]);
        assert!(count_cooccurrence(&c, &v, 0).is_err());
    }

    #[test]
    fn sharded_equals_sequential() {
        let texts: Vec<String> = (0..60)
            .map(|i| (0..(i % 7 + 1)).map(|j| format!("w{}", (i * 3 + j * 5) % 11)).collect::<Vec<_>>().join(" "))
            .collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let (c, v) = setup(&refs);
        let seq = count_cooccurrence(&c, &v, 3).unwrap();
        for shard in [1, 4, 7, 100] {
            assert_eq!(count_cooccurrence_sharded(&c, &v, 3, shard).unwrap(), seq);
        }
    }
}
