//! DeepWalk and Node2Vec walk corpora over text graphs and skip-gram
//! training with negative sampling on top of them.
//!
//! None of the defaults here come from the original experiments, which do
//! not report them; they are the usual word2vec / node2vec values.

mod alias;
mod node2vec;
mod sgns;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use alias::AliasTable;
pub use node2vec::{generate_walks, generate_walks_on, transition_probabilities, WalkCorpus};
pub use sgns::{sgns_init, sgns_train, SgnsModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    /// Nodes per walk, including the start node.
    pub walk_length: usize,
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub sg_window: usize,
    pub dim: usize,
    /// Negative samples per positive pair.
    pub negatives: usize,
    pub epochs: usize,
    pub seed: u64,
    pub lr_start: f64,
    pub lr_end: f64,
    /// Upper bound on cached second-order alias tables per worker.
    pub alias_cache_capacity: usize,
    /// Lock-free multi-threaded SGNS. Faster, but results depend on thread
    /// scheduling and are not reproducible.
    pub parallel_sgns: bool,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walks_per_node: 10,
            walk_length: 40,
            p: 1.0,
            q: 1.0,
            sg_window: 5,
            dim: 200,
            negatives: 5,
            epochs: 5,
            seed: 1,
            lr_start: 0.025,
            lr_end: 1e-4,
            alias_cache_capacity: 100_000,
            parallel_sgns: false,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.p > 0.0 && self.p.is_finite()) || !(self.q > 0.0 && self.q.is_finite()) {
            return bad("p and q must be positive");
        }
        if self.walk_length < 2 {
            return bad("walk_length must be at least 2");
        }
        if self.walks_per_node == 0 {
            return bad("walks_per_node must be positive");
        }
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.sg_window == 0 {
            return bad("sg_window must be positive");
        }
        if !(self.lr_start >= 0.0 && self.lr_end >= 0.0 && self.lr_start.is_finite() && self.lr_end.is_finite()) {
            return bad("learning rates must be finite and non-negative");
        }
        Ok(())
    }
}
