use ndarray::Array2;
use rayon::prelude::*;

use super::{count_cooccurrence, pmi_edges, tfidf_edges, GraphKind, NormalizeMode, TextGraph};
use crate::corpus::{LabeledCorpus, Vocabulary};
use crate::embedding::{cosine, EmbeddingTable};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sparse::SparseMatrix;

/// Word graph: PMI edges over sliding windows plus unit self-loops.
pub fn build_word_graph<T: Real>(
    corpus: &LabeledCorpus,
    vocab: &Vocabulary,
    window_size: usize,
    mode: NormalizeMode,
) -> Result<TextGraph<T>> {
    let table = count_cooccurrence(corpus, vocab, window_size)?;
    let pmi = pmi_edges::<T>(&table)?;
    let n = vocab.len();
    let triplets = pmi
        .triplets()
        .chain((0..n).map(|i| (i, i, T::one())))
        .collect();
    let adjacency = SparseMatrix::from_triplets(n, n, triplets)?;
    TextGraph::from_adjacency(GraphKind::W, adjacency, n, 0, mode)
}

/// Word+sentence graph: PMI word-word block, TF-IDF word-sentence block
/// (mirrored) and a unit diagonal. Sentence `j` is node `|V| + j`.
pub fn build_ws_graph<T: Real>(
    corpus: &LabeledCorpus,
    vocab: &Vocabulary,
    window_size: usize,
    mode: NormalizeMode,
) -> Result<TextGraph<T>> {
    let table = count_cooccurrence(corpus, vocab, window_size)?;
    let pmi = pmi_edges::<T>(&table)?;
    let tfidf = tfidf_edges::<T>(corpus, vocab)?;
    let n_words = vocab.len();
    let n = n_words + corpus.len();
    let mut triplets: Vec<(usize, usize, T)> = pmi.triplets().collect();
    for (w, s, v) in tfidf.triplets() {
        triplets.push((w, n_words + s, v));
        triplets.push((n_words + s, w, v));
    }
    triplets.extend((0..n).map(|i| (i, i, T::one())));
    let adjacency = SparseMatrix::from_triplets(n, n, triplets)?;
    TextGraph::from_adjacency(GraphKind::WS, adjacency, n_words, corpus.len(), mode)
}

/// Mean of each sentence's token vectors. Tokens without a vector count as zeros.
pub fn sentence_vectors<T: Real>(
    corpus: &LabeledCorpus,
    vocab: &Vocabulary,
    word_vectors: &EmbeddingTable<T>,
) -> Array2<T> {
    let dim = word_vectors.dim();
    let mut out = Array2::zeros((corpus.len(), dim));
    for (mut row, tokens) in out.rows_mut().into_iter().zip(corpus.token_lists()) {
        if tokens.is_empty() {
            continue;
        }
        for &t in tokens {
            if let Some(v) = word_vectors.get(vocab.token(t)) {
                row += &v;
            }
        }
        row /= T::of_usize(tokens.len());
    }
    out
}

/// Sentence graph from cosine similarity of averaged word vectors.
///
/// Each sentence keeps its `k_neighbors` most similar other sentences with
/// positive similarity (ties to the lower index); the edge set is the union
/// of those choices, plus unit self-loops.
pub fn build_sentence_graph<T: Real>(
    corpus: &LabeledCorpus,
    vocab: &Vocabulary,
    word_vectors: &EmbeddingTable<T>,
    k_neighbors: usize,
    mode: NormalizeMode,
) -> Result<TextGraph<T>> {
    if k_neighbors == 0 {
        return Err(Error::InvalidArgument("k_neighbors must be at least 1".into()));
    }
    let vectors = sentence_vectors(corpus, vocab, word_vectors);
    let m = corpus.len();
    // evaluated with the lower index first so both orientations agree bit-for-bit
    let sim = |i: usize, j: usize| {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        cosine(vectors.row(a), vectors.row(b))
    };
    let chosen: Vec<Vec<(usize, T)>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut cands: Vec<(usize, T)> = (0..m)
                .filter(|&j| j != i)
                .map(|j| (j, sim(i, j)))
                .filter(|(_, s)| *s > T::zero())
                .collect();
            cands.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            cands.truncate(k_neighbors);
            cands
        })
        .collect();
    let mut triplets = Vec::new();
    for (i, picks) in chosen.into_iter().enumerate() {
        for (j, s) in picks {
            triplets.push((i, j, s));
            triplets.push((j, i, s));
        }
    }
    // union semantics: a pair picked from both ends must not be summed
    triplets.sort_by_key(|t| (t.0, t.1));
    triplets.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    triplets.extend((0..m).map(|i| (i, i, T::one())));
    let adjacency = SparseMatrix::from_triplets(m, m, triplets)?;
    TextGraph::from_adjacency(GraphKind::S, adjacency, 0, m, mode)
}
