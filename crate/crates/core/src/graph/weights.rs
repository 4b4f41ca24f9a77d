use crate::corpus::{LabeledCorpus, Vocabulary};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sparse::SparseMatrix;

use super::CooccurrenceTable;

/// Positive pointwise mutual information between word pairs.
///
/// `PMI(i, j) = ln(#W(i,j) · #W / (#W(i) · #W(j)))`. Pairs with PMI ≤ 0 are
/// dropped; kept pairs are stored in both orientations.
pub fn pmi_edges<T: Real>(table: &CooccurrenceTable) -> Result<SparseMatrix<T>> {
    if table.total_windows == 0 {
        return Err(Error::InvalidArgument("co-occurrence table has no windows".into()));
    }
    let total = table.total_windows as f64;
    let mut triplets = Vec::new();
    for (&(i, j), &n_ij) in &table.pair_window_counts {
        let n_i = table.word_window_counts[i] as f64;
        let n_j = table.word_window_counts[j] as f64;
        let pmi = ((n_ij as f64 * total) / (n_i * n_j)).ln();
        if pmi > 0.0 {
            let w = T::of(pmi);
            triplets.push((i, j, w));
            triplets.push((j, i, w));
        }
    }
    SparseMatrix::from_triplets(table.vocab_size(), table.vocab_size(), triplets)
}

/// Word × sentence TF-IDF: `tf(i, j) · ln(M / df(i))` with raw term counts.
pub fn tfidf_edges<T: Real>(corpus: &LabeledCorpus, vocab: &Vocabulary) -> Result<SparseMatrix<T>> {
    let m = corpus.len();
    let mut df = vec![0usize; vocab.len()];
    let mut per_sentence: Vec<Vec<(usize, usize)>> = Vec::with_capacity(m);
    for tokens in corpus.token_lists() {
        let mut sorted = tokens.to_vec();
        sorted.sort_unstable();
        let mut counts: Vec<(usize, usize)> = Vec::new();
        for t in sorted {
            match counts.last_mut() {
                Some((w, c)) if *w == t => *c += 1,
                _ => counts.push((t, 1)),
            }
        }
        for &(w, _) in &counts {
            df[w] += 1;
        }
        per_sentence.push(counts);
    }
    let mut triplets = Vec::new();
    for (j, counts) in per_sentence.iter().enumerate() {
        for &(i, tf) in counts {
            let idf = (m as f64 / df[i] as f64).ln();
            let w = tf as f64 * idf;
            if w != 0.0 {
                triplets.push((i, j, T::of(w)));
            }
        }
    }
    SparseMatrix::from_triplets(vocab.len(), m, triplets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, Labels};
    use std::collections::BTreeMap;

    fn table(total: u64, wi: u64, wj: u64, wij: u64) -> CooccurrenceTable {
        CooccurrenceTable {
            window_size: 3,
            total_windows: total,
            word_window_counts: vec![wi, wj],
            pair_window_counts: BTreeMap::from([((0, 1), wij)]),
        }
    }

    #[test]
    fn independence_gives_no_edge() {
        let m = pmi_edges::<f64>(&table(1, 1, 1, 1)).unwrap();
        assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn positive_pmi_is_kept_symmetrically() {
        let m = pmi_edges::<f64>(&table(4, 2, 2, 2)).unwrap();
        assert_eq!(m.nnz(), 2);
        assert!((m.get(0, 1) - 2.0_f64.ln()).abs() < 1e-15);
        assert_eq!(m.get(0, 1), m.get(1, 0));
        assert!(m.is_symmetric());
    }

    #[test]
    fn negative_pmi_dropped() {
        // ln(1 * 10 / (5 * 5)) < 0
        assert_eq!(pmi_edges::<f64>(&table(10, 5, 5, 1)).unwrap().nnz(), 0);
        let empty = CooccurrenceTable {
            window_size: 3,
            total_windows: 0,
            word_window_counts: vec![],
            pair_window_counts: BTreeMap::new(),
        };
        assert!(pmi_edges::<f64>(&empty).is_err());
    }

    #[test]
    fn tfidf_cases() {
        let mut c = LabeledCorpus::from_texts([("a a b", Labels::default()), ("b", Labels::default())]);
        let v = build_vocabulary(&mut c, 1).unwrap();
        let m = tfidf_edges::<f64>(&c, &v).unwrap();
        let (a, b) = (v.index("a").unwrap(), v.index("b").unwrap());
        assert_eq!(m.shape(), (2, 2));
        assert!((m.get(a, 0) - 2.0 * 2.0_f64.ln()).abs() < 1e-15);
        assert_eq!(m.row_degree(b), 0, "word in every sentence has idf 0");
    }
}
