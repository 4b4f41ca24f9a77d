#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use textgcn::corpus::{build_vocabulary, Labels, LabeledCorpus, Task, Vocabulary};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random labeled corpus: `n_sentences` sentences of 1..=`max_len` words over
/// a skewed pool of `pool` words. Each task label is present with probability 0.7.
pub fn random_corpus(rng: &mut ChaCha8Rng, n_sentences: usize, pool: usize, max_len: usize) -> (LabeledCorpus, Vocabulary) {
    let items: Vec<(String, Labels)> = (0..n_sentences)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            let words: Vec<String> = (0..len)
                .map(|_| {
                    // squaring a uniform skews draws toward low ids
                    let u: f64 = rng.random();
                    format!("w{}", ((u * u) * pool as f64) as usize)
                })
                .collect();
            let mut labels = Labels::default();
            for task in Task::ALL {
                if rng.random_bool(0.7) {
                    labels.set(task, Some(rng.random_range(0..task.n_classes())));
                }
            }
            (words.join(" "), labels)
        })
        .collect();
    let mut corpus = LabeledCorpus::from_texts(items);
    let vocab = build_vocabulary(&mut corpus, 1).unwrap();
    (corpus, vocab)
}
