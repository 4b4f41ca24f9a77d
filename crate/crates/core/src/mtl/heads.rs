use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Task;
use crate::error::{Error, Result};
use crate::gcn::glorot_uniform;
use crate::scalar::{sigmoid, softplus, Real};

/// Linear classifier on sentence embeddings with one logistic output per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskHead<T> {
    pub task: Task,
    /// `K × C` weight.
    pub weight: Array2<T>,
}

impl<T: Real> TaskHead<T> {
    pub fn init<R: Rng>(task: Task, dim: usize, rng: &mut R) -> Self {
        TaskHead {
            task,
            weight: glorot_uniform(dim, task.n_classes(), rng),
        }
    }

    pub fn zeros(task: Task, dim: usize) -> Self {
        TaskHead {
            task,
            weight: Array2::zeros((dim, task.n_classes())),
        }
    }

    pub fn n_classes(&self) -> usize {
        self.weight.ncols()
    }
}

/// Per-class scores `Z_s · W` and their logistic probabilities.
pub fn head_forward<T: Real>(z_sentences: ArrayView2<'_, T>, head: &TaskHead<T>) -> Result<(Array2<T>, Array2<T>)> {
    if z_sentences.ncols() != head.weight.nrows() {
        return Err(Error::shape("head_forward", head.weight.nrows(), z_sentences.ncols()));
    }
    let scores = z_sentences.dot(&head.weight);
    let probs = scores.mapv(sigmoid);
    Ok((scores, probs))
}

/// Index of the highest score in each row; ties go to the lower class.
pub fn argmax_rows<T: Real>(scores: ArrayView2<'_, T>) -> Vec<usize> {
    scores
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Scores of one task for a batch of sentences; `None` labels are masked out.
#[derive(Debug, Clone)]
pub struct TaskScores<T> {
    pub task: Task,
    pub scores: Array2<T>,
    pub labels: Vec<Option<usize>>,
    /// Relative weight of the task in the average (default 1).
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct MultitaskLoss<T> {
    pub value: T,
    /// Per-task mean sigmoid cross-entropy; `None` for tasks without labels.
    pub per_task: Vec<Option<T>>,
    /// Gradient of `value` with respect to each task's scores (zero rows for
    /// masked sentences); `None` for tasks without labels.
    pub d_scores: Vec<Option<Array2<T>>>,
}

/// Masked multi-task sigmoid cross-entropy.
///
/// Per task: mean over labeled sentences of `Σ_c BCE(sigmoid(s_c), onehot_c)`.
/// The result is the weighted mean over tasks that have at least one label.
pub fn multitask_loss<T: Real>(tasks: &[TaskScores<T>]) -> Result<MultitaskLoss<T>> {
    let mut per_task = Vec::with_capacity(tasks.len());
    let mut grads = Vec::with_capacity(tasks.len());
    let mut weight_sum = 0.0;
    for t in tasks {
        if t.scores.nrows() != t.labels.len() {
            return Err(Error::shape("multitask_loss", t.labels.len(), t.scores.nrows()));
        }
        if t.scores.ncols() != t.task.n_classes() {
            return Err(Error::shape("multitask_loss", t.task.n_classes(), t.scores.ncols()));
        }
        let n_labeled = t.labels.iter().filter(|l| l.is_some()).count();
        if n_labeled == 0 {
            per_task.push(None);
            grads.push(None);
            continue;
        }
        let inv_n = T::one() / T::of_usize(n_labeled);
        let mut loss = T::zero();
        let mut d = Array2::zeros(t.scores.dim());
        for (i, label) in t.labels.iter().enumerate() {
            let Some(label) = *label else { continue };
            for (c, &s) in t.scores.row(i).iter().enumerate() {
                let y = if c == label { T::one() } else { T::zero() };
                // -y ln σ(s) - (1-y) ln(1-σ(s)) = softplus(s) - y s
                loss += softplus(s) - y * s;
                d[[i, c]] = (sigmoid(s) - y) * inv_n;
            }
        }
        per_task.push(Some(loss * inv_n));
        grads.push(Some(d));
        weight_sum += t.weight;
    }
    if weight_sum == 0.0 {
        return Err(Error::NoLabeledTasks);
    }
    let mut value = T::zero();
    for (i, t) in tasks.iter().enumerate() {
        let Some(l) = per_task[i] else { continue };
        let share = T::of(t.weight / weight_sum);
        value += share * l;
        if let Some(d) = grads[i].as_mut() {
            d.mapv_inplace(|g| g * share);
        }
    }
    Ok(MultitaskLoss {
        value,
        per_task,
        d_scores: grads,
    })
}

/// `L = L_MSE + λ · L_MT_CLA`.
pub fn joint_loss<T: Real>(mse: T, multitask: T, lambda: T) -> T {
    mse + lambda * multitask
}
