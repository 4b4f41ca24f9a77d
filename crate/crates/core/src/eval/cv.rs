use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{confusion, f1_from_confusion, ClassScores, ConfusionMatrix};
use crate::corpus::{FoldPlan, LabeledCorpus, Task, Vocabulary};
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::graph::{build_sentence_graph, build_word_graph, build_ws_graph, GraphKind, NormalizeMode, TextGraph};
use crate::mtl::{train, GcnModel, SentenceReadout, TrainConfig};
use crate::scalar::Real;

/// How to build the graph a model trains on.
#[derive(Debug, Clone)]
pub enum GraphRecipe {
    Word { window_size: usize, normalize: NormalizeMode },
    WordSentence { window_size: usize, normalize: NormalizeMode },
    Sentence {
        word_vectors: EmbeddingTable<f64>,
        k_neighbors: usize,
        normalize: NormalizeMode,
    },
}

impl GraphRecipe {
    pub fn kind(&self) -> GraphKind {
        match self {
            GraphRecipe::Word { .. } => GraphKind::W,
            GraphRecipe::WordSentence { .. } => GraphKind::WS,
            GraphRecipe::Sentence { .. } => GraphKind::S,
        }
    }

    pub fn build<T: Real>(&self, corpus: &LabeledCorpus, vocab: &Vocabulary) -> Result<TextGraph<T>> {
        match self {
            GraphRecipe::Word { window_size, normalize } => build_word_graph(corpus, vocab, *window_size, *normalize),
            GraphRecipe::WordSentence { window_size, normalize } => {
                build_ws_graph(corpus, vocab, *window_size, *normalize)
            }
            GraphRecipe::Sentence {
                word_vectors,
                k_neighbors,
                normalize,
            } => build_sentence_graph(corpus, vocab, &word_vectors.cast::<T>(), *k_neighbors, *normalize),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub task: Task,
    pub n_evaluated: usize,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
    pub per_class: Vec<ClassScores>,
    pub confusion: ConfusionMatrix,
}

impl TaskMetrics {
    /// Weighted F1 for hate speech, macro F1 for the other tasks.
    pub fn headline(&self) -> f64 {
        headline(self.task, self.macro_f1, self.weighted_f1)
    }
}

fn headline(task: Task, macro_f1: f64, weighted_f1: f64) -> f64 {
    if task == Task::Hs {
        weighted_f1
    } else {
        macro_f1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub best_epoch: usize,
    pub stopped_epoch: usize,
    pub tasks: Vec<TaskMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMean {
    pub task: Task,
    pub folds: usize,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
    pub headline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub folds: Vec<FoldMetrics>,
    pub mean: Vec<TaskMean>,
}

impl MetricsReport {
    pub fn from_folds(folds: Vec<FoldMetrics>) -> Self {
        let mut mean = Vec::new();
        for task in Task::ALL {
            let per: Vec<&TaskMetrics> = folds.iter().flat_map(|f| f.tasks.iter().filter(|t| t.task == task)).collect();
            if per.is_empty() {
                continue;
            }
            let n = per.len() as f64;
            let avg = |f: fn(&TaskMetrics) -> f64| per.iter().map(|t| f(t)).sum::<f64>() / n;
            let macro_f1 = avg(|t| t.macro_f1);
            let weighted_f1 = avg(|t| t.weighted_f1);
            mean.push(TaskMean {
                task,
                folds: per.len(),
                macro_f1,
                weighted_f1,
                accuracy: avg(|t| t.accuracy),
                headline: headline(task, macro_f1, weighted_f1),
            });
        }
        MetricsReport { folds, mean }
    }

    pub fn task_mean(&self, task: Task) -> Option<&TaskMean> {
        self.mean.iter().find(|m| m.task == task)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned text table: one line per fold and task, then the means.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{:<6} {:<5} {:>6} {:>9} {:>11} {:>9}",
            "fold", "task", "n", "macro_f1", "weighted_f1", "accuracy"
        )
        .unwrap();
        for f in &self.folds {
            for t in &f.tasks {
                writeln!(
                    out,
                    "{:<6} {:<5} {:>6} {:>9.4} {:>11.4} {:>9.4}",
                    f.fold, t.task, t.n_evaluated, t.macro_f1, t.weighted_f1, t.accuracy
                )
                .unwrap();
            }
        }
        for m in &self.mean {
            writeln!(
                out,
                "{:<6} {:<5} {:>6} {:>9.4} {:>11.4} {:>9.4}",
                "mean", m.task, m.folds, m.macro_f1, m.weighted_f1, m.accuracy
            )
            .unwrap();
        }
        out
    }
}

/// Metrics of every head on the labeled sentences among `records`.
/// Tasks with no labeled sentence in `records` are skipped.
pub fn evaluate_split<T: Real>(
    model: &GcnModel<T>,
    graph: &TextGraph<T>,
    corpus: &LabeledCorpus,
    records: &[usize],
) -> Result<Vec<TaskMetrics>> {
    let readout = SentenceReadout::for_graph(graph, corpus)?;
    let mut out = Vec::new();
    for (task, pred) in model.predict(graph, &readout)? {
        out.extend(score_task(task, &pred, corpus, records)?);
    }
    Ok(out)
}

/// Metrics of `pred` (one class per corpus record) on the labeled records
/// among `records`; `None` when none of them carries a label for `task`.
pub(crate) fn score_task(task: Task, pred: &[usize], corpus: &LabeledCorpus, records: &[usize]) -> Result<Option<TaskMetrics>> {
    let (gold, guess): (Vec<usize>, Vec<usize>) = records
        .iter()
        .filter_map(|&r| corpus.records[r].labels.get(task).map(|g| (g, pred[r])))
        .unzip();
    if gold.is_empty() {
        return Ok(None);
    }
    let cm = confusion(&gold, &guess, task.n_classes())?;
    let f1 = f1_from_confusion(&cm);
    Ok(Some(TaskMetrics {
        task,
        n_evaluated: gold.len(),
        macro_f1: f1.macro_f1,
        weighted_f1: f1.weighted_f1,
        accuracy: cm.accuracy(),
        per_class: f1.per_class,
        confusion: cm,
    }))
}

/// Transductive k-fold cross-validation.
///
/// The graph is built once from the whole corpus, so test sentences shape the
/// graph structure; only training labels supervise. Each fold trains a model
/// on its train split (early stopping on its validation split) and is scored
/// on its test fold. Folds run in parallel and report in fold order.
pub fn cross_validate<T: Real>(
    corpus: &LabeledCorpus,
    vocab: &Vocabulary,
    recipe: &GraphRecipe,
    plan: &FoldPlan,
    config: &TrainConfig,
) -> Result<MetricsReport> {
    if plan.n_records() != corpus.len() {
        return Err(Error::shape("fold plan", corpus.len(), plan.n_records()));
    }
    let graph: TextGraph<T> = recipe.build(corpus, vocab)?;
    cross_validate_on(&graph, corpus, plan, config)
}

/// [`cross_validate`] on an already built graph of the whole corpus.
pub fn cross_validate_on<T: Real>(
    graph: &TextGraph<T>,
    corpus: &LabeledCorpus,
    plan: &FoldPlan,
    config: &TrainConfig,
) -> Result<MetricsReport> {
    if plan.n_records() != corpus.len() {
        return Err(Error::shape("fold plan", corpus.len(), plan.n_records()));
    }
    let folds = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let split = plan.split(fold)?;
            let (model, history) = train(graph, corpus, &split, config)?;
            Ok(FoldMetrics {
                fold,
                best_epoch: history.best_epoch,
                stopped_epoch: history.stopped_epoch,
                tasks: evaluate_split(&model, graph, corpus, &split.test)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport::from_folds(folds))
}
