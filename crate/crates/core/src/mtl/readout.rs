use ndarray::{Array2, ArrayView2};

use crate::corpus::LabeledCorpus;
use crate::error::{Error, Result};
use crate::graph::{GraphKind, TextGraph};
use crate::scalar::Real;
use crate::sparse::SparseMatrix;

/// Linear map from node embeddings to sentence embeddings (`M × N`).
///
/// Graphs with sentence nodes select the sentence's row; word graphs
/// average the sentence's token rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceReadout<T> {
    pub matrix: SparseMatrix<T>,
}

impl<T: Real> SentenceReadout<T> {
    pub fn for_graph(graph: &TextGraph<T>, corpus: &LabeledCorpus) -> Result<Self> {
        let m = corpus.len();
        let n = graph.n_nodes();
        let matrix = match graph.kind {
            GraphKind::S | GraphKind::WS => {
                if graph.n_sentences != m {
                    return Err(Error::shape("sentence readout", graph.n_sentences, m));
                }
                let t = (0..m).map(|j| (j, graph.n_words + j, T::one())).collect();
                SparseMatrix::from_triplets(m, n, t)?
            }
            GraphKind::W => averaging_matrix(corpus, n)?,
        };
        Ok(SentenceReadout { matrix })
    }

    pub fn n_sentences(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn apply(&self, z: ArrayView2<'_, T>) -> Result<Array2<T>> {
        self.matrix.mul_dense(z)
    }

    pub fn apply_transpose(&self, d_sentences: ArrayView2<'_, T>) -> Result<Array2<T>> {
        self.matrix.transpose_mul_dense(d_sentences)
    }
}

fn averaging_matrix<T: Real>(corpus: &LabeledCorpus, n_words: usize) -> Result<SparseMatrix<T>> {
    let mut t = Vec::new();
    for (j, tokens) in corpus.token_lists().enumerate() {
        if tokens.is_empty() {
            continue;
        }
        let w = T::one() / T::of_usize(tokens.len());
        for &tok in tokens {
            if tok >= n_words {
                return Err(Error::shape("sentence readout", format!("token < {n_words}"), tok));
            }
            t.push((j, tok, w));
        }
    }
    SparseMatrix::from_triplets(corpus.len(), n_words, t)
}

/// Sentence vectors as the mean of their tokens' word embeddings.
/// Sentences without in-vocabulary tokens get the zero vector.
pub fn embed_sentences_from_words<T: Real>(z_words: ArrayView2<'_, T>, corpus: &LabeledCorpus) -> Result<Array2<T>> {
    let mut out = Array2::zeros((corpus.len(), z_words.ncols()));
    for (mut row, record) in out.rows_mut().into_iter().zip(&corpus.records) {
        if record.tokens.is_empty() {
            log::warn!("sentence {} has no in-vocabulary tokens; using the zero vector", record.id);
            continue;
        }
        for &t in &record.tokens {
            if t >= z_words.nrows() {
                return Err(Error::shape("embed_sentences_from_words", format!("token < {}", z_words.nrows()), t));
            }
            row += &z_words.row(t);
        }
        row /= T::of_usize(record.tokens.len());
    }
    Ok(out)
}
