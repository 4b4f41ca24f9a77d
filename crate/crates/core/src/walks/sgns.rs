use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::alias::AliasTable;
use super::{WalkConfig, WalkCorpus};
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::scalar::{sigmoid, softplus};

// Streams below are far above any node id used by walk generation.
const STREAM_INIT: u64 = 1 << 48;
const STREAM_TRAIN: u64 = (1 << 48) + 1;
const STREAM_EVAL: u64 = (1 << 48) + 2;
// Parallel chunk c uses STREAM_CHUNKS + c.
const STREAM_CHUNKS: u64 = (1 << 48) + 16;

/// Trained skip-gram vectors. `input` rows are the node embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgnsModel {
    pub input: Array2<f64>,
    pub output: Array2<f64>,
    /// Objective after each epoch: mean loss per positive pair (positive term
    /// plus its negatives), with the same negatives drawn every epoch.
    pub epoch_losses: Vec<f64>,
}

impl SgnsModel {
    /// Embeddings keyed by `keys`, one per node.
    pub fn embedding_table(&self, keys: Vec<String>) -> Result<EmbeddingTable<f64>> {
        EmbeddingTable::new(keys, self.input.clone())
    }

    /// Embeddings keyed by decimal node id.
    pub fn node_table(&self) -> EmbeddingTable<f64> {
        let keys = (0..self.input.nrows()).map(|i| i.to_string()).collect();
        EmbeddingTable::new(keys, self.input.clone()).expect("ids are unique")
    }
}

/// Initial input vectors: uniform in `[-0.5/dim, 0.5/dim)`. Output vectors start at zero.
pub fn sgns_init(n_nodes: usize, dim: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_INIT);
    let half = 0.5 / dim as f64;
    Array2::from_shape_simple_fn((n_nodes, dim), || rng.random_range(-half..half))
}

struct Shared {
    dim: usize,
    input: Vec<AtomicU64>,
    output: Vec<AtomicU64>,
}

impl Shared {
    fn load(v: &[AtomicU64], row: usize, dim: usize, out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = f64::from_bits(v[row * dim + k].load(Ordering::Relaxed));
        }
    }

    fn store(v: &[AtomicU64], row: usize, dim: usize, src: &[f64]) {
        for (k, s) in src.iter().enumerate() {
            v[row * dim + k].store(s.to_bits(), Ordering::Relaxed);
        }
    }

    fn to_array(v: &[AtomicU64], n: usize, dim: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, dim), |(i, k)| f64::from_bits(v[i * dim + k].load(Ordering::Relaxed)))
    }
}

struct Scratch {
    center: Vec<f64>,
    target: Vec<f64>,
    grad: Vec<f64>,
}

/// One skip-gram update for the pair (center, context) and its negatives.
/// Returns the pair's logistic loss measured before the update.
fn update_pair<R: Rng>(
    w: &Shared,
    negatives: &AliasTable,
    n_neg: usize,
    center: usize,
    context: usize,
    lr: f64,
    rng: &mut R,
    s: &mut Scratch,
) -> f64 {
    let dim = w.dim;
    Shared::load(&w.input, center, dim, &mut s.center);
    s.grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for d in 0..=n_neg {
        let (target, label) = if d == 0 {
            (context, 1.0)
        } else {
            let t = negatives.sample(rng);
            if t == context {
                continue;
            }
            (t, 0.0)
        };
        Shared::load(&w.output, target, dim, &mut s.target);
        let d = dot(&s.center, &s.target);
        loss += if label > 0.0 { softplus(-d) } else { softplus(d) };
        let g = (label - sigmoid(d)) * lr;
        for k in 0..dim {
            s.grad[k] += g * s.target[k];
            s.target[k] += g * s.center[k];
        }
        Shared::store(&w.output, target, dim, &s.target);
    }
    for k in 0..dim {
        s.center[k] += s.grad[k];
    }
    Shared::store(&w.input, center, dim, &s.center);
    loss
}

/// Mean pair loss over every (center, context) pair in the walks, weights read
/// only. Negatives come from a fresh rng on a fixed stream, so every call
/// scores the same sampled objective.
fn objective(w: &Shared, walks: &WalkCorpus, negatives: &AliasTable, n_neg: usize, window: usize, seed: u64) -> f64 {
    let dim = w.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_EVAL);
    let mut center = vec![0.0; dim];
    let mut target = vec![0.0; dim];
    let mut loss = 0.0;
    let mut pairs = 0usize;
    for walk in &walks.walks {
        for (i, &c) in walk.iter().enumerate() {
            Shared::load(&w.input, c, dim, &mut center);
            let lo = i.saturating_sub(window);
            let hi = (i + window + 1).min(walk.len());
            for (j, &context) in walk.iter().enumerate().take(hi).skip(lo) {
                if j == i {
                    continue;
                }
                Shared::load(&w.output, context, dim, &mut target);
                loss += softplus(-dot(&center, &target));
                for _ in 0..n_neg {
                    let t = negatives.sample(&mut rng);
                    if t == context {
                        continue;
                    }
                    Shared::load(&w.output, t, dim, &mut target);
                    loss += softplus(dot(&center, &target));
                }
                pairs += 1;
            }
        }
    }
    if pairs > 0 { loss / pairs as f64 } else { 0.0 }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Skip-gram with negative sampling over the walks.
///
/// Every node within `sg_window` positions of a center node is a positive
/// context; each positive pair draws `negatives` nodes from the unigram
/// distribution raised to 3/4. The learning rate decays linearly from
/// `lr_start` to `lr_end` over all center positions of all epochs.
///
/// The default mode is sequential and reproducible. With `parallel_sgns`
/// walks are split across threads that update shared weights without locks.
pub fn sgns_train(walks: &WalkCorpus, config: &WalkConfig) -> Result<SgnsModel> {
    config.validate()?;
    let total_steps = walks.total_steps();
    if total_steps == 0 {
        return Err(Error::InvalidArgument("no walks to train on".into()));
    }
    let n = walks.n_nodes;
    let dim = config.dim;
    if let Some(bad) = walks.walks.iter().flatten().find(|&&v| v >= n) {
        return Err(Error::InvalidArgument(format!("walk node {bad} out of range for {n} nodes")));
    }

    let mut counts = vec![0.0_f64; n];
    for &v in walks.walks.iter().flatten() {
        counts[v] += 1.0;
    }
    let noise: Vec<f64> = counts.iter().map(|c| c.powf(0.75)).collect();
    let noise = AliasTable::new(&noise).expect("walks are non-empty");

    let init = sgns_init(n, dim, config.seed);
    let shared = Shared {
        dim,
        input: init.iter().map(|x| AtomicU64::new(x.to_bits())).collect(),
        output: (0..n * dim).map(|_| AtomicU64::new(0f64.to_bits())).collect(),
    };
    let schedule_len = (total_steps * config.epochs).max(1) as f64;
    let lr_at = |done: usize| {
        let frac = (done as f64 / schedule_len).min(1.0);
        config.lr_start - (config.lr_start - config.lr_end) * frac
    };
    let window = config.sg_window;
    let train_walk = |walk: &[usize], done: &AtomicUsize, rng: &mut ChaCha8Rng, s: &mut Scratch| -> (f64, usize) {
        let mut loss = 0.0;
        let mut pairs = 0;
        for (i, &center) in walk.iter().enumerate() {
            let lr = lr_at(done.fetch_add(1, Ordering::Relaxed));
            let lo = i.saturating_sub(window);
            let hi = (i + window + 1).min(walk.len());
            for (j, &context) in walk.iter().enumerate().take(hi).skip(lo) {
                if j == i {
                    continue;
                }
                loss += update_pair(&shared, &noise, config.negatives, center, context, lr, rng, s);
                pairs += 1;
            }
        }
        (loss, pairs)
    };
    let scratch = || Scratch { center: vec![0.0; dim], target: vec![0.0; dim], grad: vec![0.0; dim] };

    let done = AtomicUsize::new(0);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(STREAM_TRAIN);
    for epoch in 0..config.epochs {
        let (loss, pairs) = if config.parallel_sgns {
            let chunk = walks.walks.len().div_ceil(rayon::current_num_threads().max(1));
            walks
                .walks
                .par_chunks(chunk.max(1))
                .enumerate()
                .map(|(c, ws)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ ((epoch as u64) << 32));
                    rng.set_stream(STREAM_CHUNKS + c as u64);
                    let mut s = scratch();
                    ws.iter().fold((0.0, 0), |acc, w| {
                        let r = train_walk(w, &done, &mut rng, &mut s);
                        (acc.0 + r.0, acc.1 + r.1)
                    })
                })
                .reduce(|| (0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
        } else {
            let mut s = scratch();
            walks.walks.iter().fold((0.0, 0), |acc, w| {
                let r = train_walk(w, &done, &mut rng, &mut s);
                (acc.0 + r.0, acc.1 + r.1)
            })
        };
        let running = if pairs > 0 { loss / pairs as f64 } else { 0.0 };
        let mean = objective(&shared, walks, &noise, config.negatives, window, config.seed);
        if !running.is_finite() || !mean.is_finite() {
            return Err(Error::Divergence { epoch: Some(epoch + 1) });
        }
        log::debug!("sgns epoch {} running loss {running:.6} objective {mean:.6}", epoch + 1);
        epoch_losses.push(mean);
    }
    Ok(SgnsModel {
        input: Shared::to_array(&shared.input, n, dim),
        output: Shared::to_array(&shared.output, n, dim),
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::cosine;

    fn corpus(walks: Vec<Vec<usize>>, n: usize) -> WalkCorpus {
        WalkCorpus { n_nodes: n, source: "test".into(), walks }
    }

    fn small_cfg() -> WalkConfig {
        WalkConfig { dim: 16, epochs: 5, sg_window: 2, negatives: 3, seed: 7, ..WalkConfig::default() }
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let wc = corpus(vec![vec![0, 1, 2, 1]], 3);
        let cfg = WalkConfig { epochs: 0, ..small_cfg() };
        let m = sgns_train(&wc, &cfg).unwrap();
        assert_eq!(m.input, sgns_init(3, cfg.dim, cfg.seed));
        assert!(m.output.iter().all(|&x| x == 0.0));
        assert!(m.epoch_losses.is_empty());
    }

    #[test]
    fn repeated_walk_loss_decreases() {
        let walk: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let mut walks = vec![walk; 20];
        walks.push((2..6).collect());
        let wc = corpus(walks, 6);
        let m = sgns_train(&wc, &small_cfg()).unwrap();
        let l = &m.epoch_losses;
        assert!(l[0] > l[1] && l[1] > l[2], "{l:?}");
    }

    #[test]
    fn init_is_bounded() {
        let v = sgns_init(10, 8, 3);
        assert!(v.iter().all(|x| x.abs() <= 0.5 / 8.0));
    }

    #[test]
    fn sequential_is_deterministic() {
        let wc = corpus(vec![vec![0, 1, 2, 3, 2, 1, 0], vec![3, 2, 3, 1]], 4);
        let a = sgns_train(&wc, &small_cfg()).unwrap();
        let b = sgns_train(&wc, &small_cfg()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parallel_mode_trains() {
        let wc = corpus(vec![vec![0, 1, 0, 1, 0, 1]; 8], 2);
        let cfg = WalkConfig { parallel_sgns: true, ..small_cfg() };
        let m = sgns_train(&wc, &cfg).unwrap();
        assert!(m.input.iter().all(|x| x.is_finite()));
        assert_eq!(m.epoch_losses.len(), 5);
        let _ = cosine(m.input.row(0), m.input.row(1));
    }
}
