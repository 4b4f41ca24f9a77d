//! Word (PMI), sentence (cosine) and word+sentence (PMI + TF-IDF) graphs.

mod build;
mod cooccur;
mod io;
mod weights;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledCorpus, Vocabulary};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sparse::SparseMatrix;

pub use build::{build_sentence_graph, build_word_graph, build_ws_graph, sentence_vectors};
pub use cooccur::{count_cooccurrence, count_cooccurrence_sharded, CooccurrenceTable};
pub use io::{parse_graph_file, read_graph_file, write_graph_file, GraphFile};
pub use weights::{pmi_edges, tfidf_edges};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    /// Word nodes only.
    W,
    /// Sentence nodes only.
    S,
    /// Word nodes followed by sentence nodes.
    WS,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            GraphKind::W => "W",
            GraphKind::S => "S",
            GraphKind::WS => "WS",
        })
    }
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "w" => Ok(GraphKind::W),
            "s" => Ok(GraphKind::S),
            "ws" | "w+s" => Ok(GraphKind::WS),
            other => Err(Error::InvalidArgument(format!("unknown graph kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeMode {
    /// `D^{-1/2} A D^{-1/2}` with `D` the row sums of `A`.
    #[default]
    SymRenorm,
    /// Propagate through `A` unchanged.
    Raw,
}

impl FromStr for NormalizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sym" | "sym_renorm" => Ok(NormalizeMode::SymRenorm),
            "raw" => Ok(NormalizeMode::Raw),
            other => Err(Error::InvalidArgument(format!("unknown normalization {other:?}"))),
        }
    }
}

/// Symmetric renormalization of an adjacency matrix, or identity for `Raw`.
///
/// Self-loops must already be present for `SymRenorm`; a zero-degree row is an error.
pub fn normalize_adjacency<T: Real>(a: &SparseMatrix<T>, mode: NormalizeMode) -> Result<SparseMatrix<T>> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::shape("adjacency normalization", "square matrix", format!("{:?}", a.shape())));
    }
    match mode {
        NormalizeMode::Raw => Ok(a.clone()),
        NormalizeMode::SymRenorm => {
            let degree = a.row_sums();
            let mut inv_sqrt = Vec::with_capacity(degree.len());
            for (node, d) in degree.into_iter().enumerate() {
                if d <= T::zero() {
                    return Err(Error::ZeroDegree { node });
                }
                inv_sqrt.push(T::one() / d.sqrt());
            }
            // scale as w * (s_i * s_j) so mirrored entries stay bit-identical
            a.map_values(|i, j, w| w * (inv_sqrt[i] * inv_sqrt[j]))
        }
    }
}

/// A built graph: raw adjacency, its propagation matrix and the node layout.
///
/// Word nodes occupy `[0, n_words)`; sentence nodes follow them (`WS`) or
/// start at 0 (`S`).
#[derive(Debug, Clone, PartialEq)]
pub struct TextGraph<T> {
    pub kind: GraphKind,
    pub adjacency: SparseMatrix<T>,
    pub normalized: SparseMatrix<T>,
    pub mode: NormalizeMode,
    pub n_words: usize,
    pub n_sentences: usize,
}

impl<T: Real> TextGraph<T> {
    /// Wraps an adjacency matrix, checking the node count for `kind`.
    pub fn from_adjacency(
        kind: GraphKind,
        adjacency: SparseMatrix<T>,
        n_words: usize,
        n_sentences: usize,
        mode: NormalizeMode,
    ) -> Result<Self> {
        let (n_words, n_sentences) = match kind {
            GraphKind::W => (n_words, 0),
            GraphKind::S => (0, n_sentences),
            GraphKind::WS => (n_words, n_sentences),
        };
        let expected = n_words + n_sentences;
        if adjacency.n_rows() != expected || adjacency.n_cols() != expected {
            return Err(Error::shape(
                "graph node count",
                format!("{expected} nodes for kind {kind}"),
                format!("{}x{}", adjacency.n_rows(), adjacency.n_cols()),
            ));
        }
        if !adjacency.is_symmetric() {
            return Err(Error::InvalidArgument("adjacency must be symmetric".into()));
        }
        let normalized = normalize_adjacency(&adjacency, mode)?;
        Ok(TextGraph {
            kind,
            adjacency,
            normalized,
            mode,
            n_words,
            n_sentences,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.n_rows()
    }

    pub fn has_word_nodes(&self) -> bool {
        matches!(self.kind, GraphKind::W | GraphKind::WS)
    }

    pub fn has_sentence_nodes(&self) -> bool {
        matches!(self.kind, GraphKind::S | GraphKind::WS)
    }

    /// Node index of a vocabulary word, if the graph has word nodes.
    pub fn word_node(&self, word: usize) -> Option<usize> {
        (self.has_word_nodes() && word < self.n_words).then_some(word)
    }

    /// Node index of the `record`-th corpus sentence, if the graph has sentence nodes.
    pub fn sentence_node(&self, record: usize) -> Option<usize> {
        if !self.has_sentence_nodes() || record >= self.n_sentences {
            return None;
        }
        Some(self.n_words + record)
    }

    /// Keys for exported node embeddings: the token for word nodes,
    /// `s#<id>` for sentence nodes.
    pub fn node_keys(&self, vocab: &Vocabulary, corpus: &LabeledCorpus) -> Vec<String> {
        let mut keys = Vec::with_capacity(self.n_nodes());
        if self.has_word_nodes() {
            keys.extend(vocab.tokens().iter().take(self.n_words).cloned());
        }
        if self.has_sentence_nodes() {
            keys.extend(corpus.records.iter().take(self.n_sentences).map(|r| sentence_key(r.id)));
        }
        keys
    }

    /// Re-derives the propagation matrix under another normalization.
    pub fn renormalized(&self, mode: NormalizeMode) -> Result<Self> {
        Self::from_adjacency(self.kind, self.adjacency.clone(), self.n_words, self.n_sentences, mode)
    }
}

pub fn sentence_key(id: usize) -> String {
    format!("s#{id}")
}
