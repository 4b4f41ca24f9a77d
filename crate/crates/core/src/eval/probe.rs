use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{score_task, FoldMetrics, MetricsReport};
use crate::corpus::{FoldPlan, FoldSplit, LabeledCorpus, Task};
use crate::error::{Error, Result};
use crate::gcn::{AdamConfig, AdamState};
use crate::mtl::{argmax_rows, multitask_loss, TaskScores};

/// Settings of the fixed-feature classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    /// L2 coefficient on the weights (not the bias).
    pub weight_decay: f64,
    pub tasks: Vec<Task>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            max_epochs: 300,
            patience: 20,
            learning_rate: 0.05,
            weight_decay: 1e-4,
            tasks: Task::ALL.to_vec(),
        }
    }
}

/// A trained per-task linear classifier over standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub mean: Array1<f64>,
    pub scale: Array1<f64>,
    /// `(K + 1) × C` per task; the last row is the bias.
    pub heads: Vec<(Task, Array2<f64>)>,
}

impl Probe {
    fn design(&self, features: ArrayView2<'_, f64>) -> Array2<f64> {
        design(features, &self.mean, &self.scale)
    }

    /// Predicted class per row for every trained task.
    pub fn predict(&self, features: ArrayView2<'_, f64>) -> Result<Vec<(Task, Vec<usize>)>> {
        if features.ncols() != self.mean.len() {
            return Err(Error::shape("probe features", self.mean.len(), features.ncols()));
        }
        let x = self.design(features);
        Ok(self.heads.iter().map(|(t, w)| (*t, argmax_rows(x.dot(w).view()))).collect())
    }
}

fn design(features: ArrayView2<'_, f64>, mean: &Array1<f64>, scale: &Array1<f64>) -> Array2<f64> {
    let (n, k) = features.dim();
    let mut x = Array2::ones((n, k + 1));
    let mut body = x.slice_mut(s![.., ..k]);
    body.assign(&features);
    body -= mean;
    body /= scale;
    x
}

fn labels_for(corpus: &LabeledCorpus, task: Task, records: &[usize]) -> Vec<Option<usize>> {
    records.iter().map(|&r| corpus.records[r].labels.get(task)).collect()
}

fn task_loss(x: &Array2<f64>, w: &Array2<f64>, task: Task, labels: &[Option<usize>]) -> Result<(f64, Option<Array2<f64>>)> {
    let scores = TaskScores { task, scores: x.dot(w), labels: labels.to_vec(), weight: 1.0 };
    let l = multitask_loss(&[scores])?;
    let d = l.d_scores.into_iter().next().flatten();
    Ok((l.value, d))
}

/// Logistic classifier on fixed sentence features (one row per corpus record).
///
/// Features are standardized with training statistics and a bias column is
/// appended. Each task gets an independent sigmoid cross-entropy head fitted
/// by full-batch Adam from zero weights, with early stopping on the
/// validation loss (training loss when the split has no validation labels).
/// Tasks without training labels are skipped.
pub fn train_probe(features: ArrayView2<'_, f64>, corpus: &LabeledCorpus, split: &FoldSplit, config: &ProbeConfig) -> Result<Probe> {
    if features.nrows() != corpus.len() {
        return Err(Error::shape("probe features", corpus.len(), features.nrows()));
    }
    if split.train.is_empty() {
        return Err(Error::InvalidArgument("probe needs training records".into()));
    }
    if config.patience > config.max_epochs {
        return Err(Error::InvalidArgument(format!(
            "patience {} exceeds max_epochs {}",
            config.patience, config.max_epochs
        )));
    }
    let train_rows = features.select(Axis(0), &split.train);
    let mean = train_rows.mean_axis(Axis(0)).expect("non-empty");
    let scale = train_rows.std_axis(Axis(0), 0.0).mapv(|s| if s > 1e-12 { s } else { 1.0 });
    let x_train = design(train_rows.view(), &mean, &scale);
    let x_val = design(features.select(Axis(0), &split.val).view(), &mean, &scale);
    let k1 = features.ncols() + 1;
    let adam = AdamConfig { learning_rate: config.learning_rate, ..AdamConfig::default() };

    let mut heads = Vec::new();
    for &task in &config.tasks {
        let y_train = labels_for(corpus, task, &split.train);
        if y_train.iter().all(Option::is_none) {
            continue;
        }
        let y_val = labels_for(corpus, task, &split.val);
        let use_val = y_val.iter().any(Option::is_some);
        let mut w = Array2::zeros((k1, task.n_classes()));
        let mut state = AdamState::new(&[(k1, task.n_classes())]);
        let mut best = (f64::INFINITY, w.clone());
        let mut since = 0;
        for _ in 0..config.max_epochs {
            let (_, d) = task_loss(&x_train, &w, task, &y_train)?;
            let mut grad = x_train.t().dot(&d.expect("task has labels"));
            let mut decay = w.clone();
            decay.row_mut(k1 - 1).fill(0.0);
            grad.scaled_add(config.weight_decay, &decay);
            state.step(&adam, &mut [(&mut w, Some(&grad))])?;
            let monitored = if use_val {
                task_loss(&x_val, &w, task, &y_val)?.0
            } else {
                task_loss(&x_train, &w, task, &y_train)?.0
            };
            if !monitored.is_finite() {
                return Err(Error::Divergence { epoch: None });
            }
            if monitored < best.0 {
                best = (monitored, w.clone());
                since = 0;
            } else {
                since += 1;
                if since >= config.patience {
                    break;
                }
            }
        }
        heads.push((task, best.1));
    }
    if heads.is_empty() {
        return Err(Error::NoLabeledTasks);
    }
    Ok(Probe { mean, scale, heads })
}

/// k-fold evaluation of fixed features with [`train_probe`]. Folds run in
/// parallel and report in fold order; epoch fields of each fold are zero.
pub fn cross_validate_features(
    features: ArrayView2<'_, f64>,
    corpus: &LabeledCorpus,
    plan: &FoldPlan,
    config: &ProbeConfig,
) -> Result<MetricsReport> {
    if plan.n_records() != corpus.len() {
        return Err(Error::shape("fold plan", corpus.len(), plan.n_records()));
    }
    let folds = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let split = plan.split(fold)?;
            let probe = train_probe(features, corpus, &split, config)?;
            let mut tasks = Vec::new();
            for (task, pred) in probe.predict(features)? {
                tasks.extend(score_task(task, &pred, corpus, &split.test)?);
            }
            Ok(FoldMetrics { fold, best_epoch: 0, stopped_epoch: 0, tasks })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport::from_folds(folds))
}
