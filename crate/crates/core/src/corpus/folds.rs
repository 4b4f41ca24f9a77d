use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seeded k-fold assignment of record indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub val_fraction: f64,
    /// Fold index of every record.
    pub assignments: Vec<usize>,
    /// Seeded permutation of record indices; fold membership is round-robin over it.
    pub order: Vec<usize>,
}

/// Record indices for one fold iteration. All three lists are ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles records with a seeded permutation and deals them round-robin into `k` folds.
pub fn make_folds(n_records: usize, k: usize, seed: u64, val_fraction: f64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    if k > n_records {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds corpus size {n_records}"
        )));
    }
    if !(0.0..1.0).contains(&val_fraction) {
        return Err(Error::InvalidArgument(format!(
            "val_fraction must be in [0, 1), got {val_fraction}"
        )));
    }
    let mut order: Vec<usize> = (0..n_records).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignments = vec![0; n_records];
    for (pos, &rec) in order.iter().enumerate() {
        assignments[rec] = pos % k;
    }
    Ok(FoldPlan {
        k,
        seed,
        val_fraction,
        assignments,
        order,
    })
}

impl FoldPlan {
    pub fn n_records(&self) -> usize {
        self.assignments.len()
    }

    /// Number of validation records: `val_fraction` of the whole corpus.
    pub fn val_count(&self) -> usize {
        (self.val_fraction * self.n_records() as f64).round() as usize
    }

    /// Fold `fold` is the test set; validation takes the first
    /// [`val_count`](Self::val_count) remaining records in permuted order.
    pub fn split(&self, fold: usize) -> Result<FoldSplit> {
        if fold >= self.k {
            return Err(Error::InvalidArgument(format!(
                "fold {fold} out of range for k = {}",
                self.k
            )));
        }
        let mut test = Vec::new();
        let mut rest = Vec::new();
        for &rec in &self.order {
            if self.assignments[rec] == fold {
                test.push(rec);
            } else {
                rest.push(rec);
            }
        }
        let n_val = self.val_count().min(rest.len());
        let mut val = rest[..n_val].to_vec();
        let mut train = rest[n_val..].to_vec();
        test.sort_unstable();
        val.sort_unstable();
        train.sort_unstable();
        Ok(FoldSplit { train, val, test })
    }
}
