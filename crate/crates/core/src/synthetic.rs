//! Seeded synthetic corpora with known cluster structure, used by tests,
//! benchmarks and the CLI's smoke runs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Labels, LabeledCorpus, Task};

/// Two clusters of sentences over disjoint vocabularies. Each cluster splits
/// into two sub-clusters that prefer one half of the cluster's words.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoClusterSpec {
    pub n_sentences: usize,
    pub words_per_cluster: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Share of sentences that carry an EI label.
    pub ei_fraction: f64,
    /// Probability that a word is drawn from the sentence's own sub-cluster half.
    pub subcluster_affinity: f64,
    pub seed: u64,
}

impl Default for TwoClusterSpec {
    fn default() -> Self {
        TwoClusterSpec {
            n_sentences: 200,
            words_per_cluster: 50,
            min_len: 6,
            max_len: 12,
            ei_fraction: 0.6,
            subcluster_affinity: 0.85,
            seed: 42,
        }
    }
}

/// Word `j` of cluster `c`.
pub fn cluster_word(c: usize, j: usize) -> String {
    format!("{}{j}", if c == 0 { "alpha" } else { "omega" })
}

/// Builds the corpus. Sentence `i` belongs to cluster `i % 2` and sub-cluster
/// `(i / 2) % 2`, so both clusters and all four sub-clusters are balanced.
///
/// Labels: SA and HS equal the cluster, SAR is its complement, and EI is
/// `2 * cluster + subcluster` on a seeded `ei_fraction` of the sentences.
pub fn two_cluster_corpus(spec: &TwoClusterSpec) -> LabeledCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_sentences;
    let mut ei_rows: Vec<usize> = (0..n).collect();
    ei_rows.shuffle(&mut rng);
    let n_ei = (spec.ei_fraction * n as f64).round() as usize;
    let mut has_ei = vec![false; n];
    for &i in &ei_rows[..n_ei.min(n)] {
        has_ei[i] = true;
    }
    let half = (spec.words_per_cluster / 2).max(1);
    let items: Vec<(String, Labels)> = (0..n)
        .map(|i| {
            let c = i % 2;
            let s = (i / 2) % 2;
            let len = rng.random_range(spec.min_len..=spec.max_len.max(spec.min_len));
            let words: Vec<String> = (0..len)
                .map(|_| {
                    let own = rng.random_bool(spec.subcluster_affinity);
                    let part = if own { s } else { 1 - s };
                    let lo = part * half;
                    let hi = if part == 0 { half } else { spec.words_per_cluster };
                    cluster_word(c, rng.random_range(lo..hi.max(lo + 1)))
                })
                .collect();
            let mut labels = Labels::default().with(Task::Sa, c).with(Task::Hs, c).with(Task::Sar, 1 - c);
            if has_ei[i] {
                labels = labels.with(Task::Ei, 2 * c + s);
            }
            (words.join(" "), labels)
        })
        .collect();
    LabeledCorpus::from_texts(items)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_labels() {
        let spec = TwoClusterSpec::default();
        let c = two_cluster_corpus(&spec);
        assert_eq!(c.len(), 200);
        assert_eq!(c.labeled_count(Task::Sa), 200);
        assert_eq!(c.labeled_count(Task::Ei), 120);
        for r in &c.records {
            let cl = r.labels.get(Task::Sa).unwrap();
            let prefix = if cl == 0 { "alpha" } else { "omega" };
            assert!(r.words.iter().all(|w| w.starts_with(prefix)));
            if let Some(e) = r.labels.get(Task::Ei) {
                assert_eq!(e / 2, cl);
            }
        }
        assert_eq!(c, two_cluster_corpus(&spec));
    }
}
