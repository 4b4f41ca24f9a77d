use std::num::NonZeroUsize;

use lru::LruCache;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::alias::AliasTable;
use super::WalkConfig;
use crate::error::{Error, Result};
use crate::graph::TextGraph;
use crate::mtl::stream_rng;
use crate::scalar::Real;
use crate::sparse::SparseMatrix;

/// Random walks over a graph's nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkCorpus {
    pub n_nodes: usize,
    /// Identifies the graph the walks came from.
    pub source: String,
    pub walks: Vec<Vec<usize>>,
}

impl WalkCorpus {
    pub fn total_steps(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }

    /// One walk per line, node ids separated by spaces.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for w in &self.walks {
            let line: Vec<String> = w.iter().map(usize::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// True when every consecutive pair is an edge of `adjacency`.
    pub fn is_valid_for<T: Real>(&self, adjacency: &SparseMatrix<T>) -> bool {
        self.walks
            .iter()
            .all(|w| w.windows(2).all(|p| adjacency.contains(p[0], p[1])))
    }
}

/// Exact next-step distribution from `current` given the previous node.
///
/// Unnormalized weight of neighbor `x` is `A[current][x] / p` when `x` is the
/// previous node, `A[current][x]` when `x` neighbors the previous node and
/// `A[current][x] / q` otherwise. Without a previous node the step is
/// proportional to edge weight. Returns `(node, probability)` by ascending node.
pub fn transition_probabilities<T: Real>(
    adjacency: &SparseMatrix<T>,
    previous: Option<usize>,
    current: usize,
    p: f64,
    q: f64,
) -> Vec<(usize, f64)> {
    let weights = step_weights(adjacency, previous, current, p, q);
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    weights.into_iter().map(|(x, w)| (x, w / total)).collect()
}

fn step_weights<T: Real>(
    adjacency: &SparseMatrix<T>,
    previous: Option<usize>,
    current: usize,
    p: f64,
    q: f64,
) -> Vec<(usize, f64)> {
    adjacency
        .row(current)
        .map(|(x, w)| {
            let w = w.as_f64();
            let w = match previous {
                None => w,
                Some(t) if x == t => w / p,
                Some(t) if adjacency.contains(t, x) => w,
                Some(_) => w / q,
            };
            (x, w)
        })
        .collect()
}

fn alias_for<T: Real>(adjacency: &SparseMatrix<T>, previous: Option<usize>, current: usize, cfg: &WalkConfig) -> AliasTable {
    let weights: Vec<f64> = step_weights(adjacency, previous, current, cfg.p, cfg.q)
        .into_iter()
        .map(|(_, w)| w)
        .collect();
    AliasTable::new(&weights).expect("rows of a walkable graph have positive weight")
}

/// Node2Vec walks over the raw adjacency of `graph`.
pub fn generate_walks<T: Real>(graph: &TextGraph<T>, config: &WalkConfig) -> Result<WalkCorpus> {
    let mut wc = generate_walks_on(&graph.adjacency, config)?;
    wc.source = graph.kind.to_string();
    Ok(wc)
}

/// Node2Vec walks over a symmetric, non-negative adjacency matrix.
///
/// Every node starts `walks_per_node` walks of `walk_length` nodes, drawn
/// from an RNG stream derived from `(seed, node)`. The first step is
/// proportional to edge weight, later steps follow the second-order rule of
/// [`transition_probabilities`]. With `p = q = 1` the walk is first-order.
/// Walks are returned round by round: all nodes' first walks, then the second, ...
pub fn generate_walks_on<T: Real>(adjacency: &SparseMatrix<T>, config: &WalkConfig) -> Result<WalkCorpus> {
    config.validate()?;
    let n = adjacency.n_rows();
    if adjacency.n_cols() != n {
        return Err(Error::shape("walk graph", "square adjacency", format!("{:?}", adjacency.shape())));
    }
    if let Some(isolated) = (0..n).find(|&v| adjacency.row_degree(v) == 0 || adjacency.row(v).all(|(_, w)| w <= T::zero())) {
        return Err(Error::InvalidArgument(format!("node {isolated} has no edges to walk")));
    }
    if adjacency.values().iter().any(|&w| w < T::zero()) {
        return Err(Error::InvalidArgument("walks need non-negative edge weights".into()));
    }
    let first_order: Vec<AliasTable> = (0..n).map(|v| alias_for(adjacency, None, v, config)).collect();
    let second_order = config.p != 1.0 || config.q != 1.0;
    let capacity = NonZeroUsize::new(config.alias_cache_capacity.max(1)).unwrap();

    let per_node: Vec<Vec<Vec<usize>>> = (0..n)
        .into_par_iter()
        .map_init(
            || LruCache::<(usize, usize), AliasTable>::new(capacity),
            |cache, start| {
                let mut rng = stream_rng(config.seed, start as u64);
                (0..config.walks_per_node)
                    .map(|_| {
                        let mut walk = Vec::with_capacity(config.walk_length);
                        walk.push(start);
                        while walk.len() < config.walk_length {
                            let cur = *walk.last().unwrap();
                            let cols = adjacency.indices();
                            let base = adjacency.indptr()[cur];
                            let pick = if walk.len() == 1 || !second_order {
                                first_order[cur].sample(&mut rng)
                            } else {
                                let prev = walk[walk.len() - 2];
                                let key = (prev, cur);
                                if let Some(t) = cache.get(&key) {
                                    t.sample(&mut rng)
                                } else {
                                    let t = alias_for(adjacency, Some(prev), cur, config);
                                    let s = t.sample(&mut rng);
                                    cache.put(key, t);
                                    s
                                }
                            };
                            walk.push(cols[base + pick]);
                        }
                        walk
                    })
                    .collect()
            },
        )
        .collect();

    let mut walks = Vec::with_capacity(n * config.walks_per_node);
    for round in 0..config.walks_per_node {
        for node_walks in &per_node {
            walks.push(node_walks[round].clone());
        }
    }
    Ok(WalkCorpus { n_nodes: n, source: "adjacency".into(), walks })
}
