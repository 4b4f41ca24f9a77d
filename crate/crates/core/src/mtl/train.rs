use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::model::{GcnModel, Supervision, TrainConfig};
use super::readout::SentenceReadout;
use crate::corpus::{FoldSplit, LabeledCorpus};
use crate::error::{Error, Result};
use crate::eval::f1_scores;
use crate::graph::TextGraph;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub l_mse: f64,
    pub l_cla: f64,
    pub l_total: f64,
    pub val_total: f64,
    /// Validation macro F1 per task, in `Task::ALL` order; `None` when not evaluated.
    pub val_f1: [Option<f64>; 4],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Last epoch run.
    pub stopped_epoch: usize,
    /// Epoch with the lowest validation loss; its parameters are returned.
    pub best_epoch: usize,
    /// True when patience ran out before `max_epochs`.
    pub early_stopped: bool,
}

impl TrainHistory {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs.iter().find(|e| e.epoch == self.best_epoch)
    }

    /// `epoch,l_mse,l_cla,l_total,val_total,f1_sa,f1_ei,f1_hs,f1_sar`; empty
    /// cells for tasks that were not evaluated.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,l_mse,l_cla,l_total,val_total,f1_sa,f1_ei,f1_hs,f1_sar\n");
        for e in &self.epochs {
            write!(out, "{},{},{},{},{}", e.epoch, e.l_mse, e.l_cla, e.l_total, e.val_total).unwrap();
            for f in e.val_f1 {
                out.push(',');
                if let Some(f) = f {
                    write!(out, "{f}").unwrap();
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Validation F1 of every head on the labeled sentences of `supervision`.
pub(crate) fn supervision_f1<T: Real>(
    model: &GcnModel<T>,
    graph: &TextGraph<T>,
    readout: &SentenceReadout<T>,
    supervision: &Supervision,
) -> Result<[Option<f64>; 4]> {
    let mut out = [None; 4];
    if supervision.is_empty() {
        return Ok(out);
    }
    for (task, pred) in model.predict(graph, readout)? {
        let labeled = supervision.labeled(task);
        if labeled.is_empty() {
            continue;
        }
        let gold: Vec<usize> = labeled.iter().map(|&(_, l)| l).collect();
        let guess: Vec<usize> = labeled.iter().map(|&(r, _)| pred[r]).collect();
        out[task.index()] = Some(f1_scores(&gold, &guess, task.n_classes())?.macro_f1);
    }
    Ok(out)
}

/// Full-batch training with early stopping on the validation loss.
///
/// Each epoch runs forward (with dropout), backward and one Adam step. The
/// validation loss is then measured without dropout: reconstruction over the
/// whole graph plus λ times the classification loss on validation labels
/// (training labels when the split has no validation records). Training
/// stops after `patience` epochs without strict improvement, and the model
/// comes back with the parameters of the best epoch.
pub fn train<T: Real>(
    graph: &TextGraph<T>,
    corpus: &LabeledCorpus,
    split: &FoldSplit,
    config: &TrainConfig,
) -> Result<(GcnModel<T>, TrainHistory)> {
    train_with_observer(graph, corpus, split, config, |_, _| {})
}

/// [`train`] that calls `observer(epoch, model)` after every parameter update.
pub fn train_with_observer<T: Real>(
    graph: &TextGraph<T>,
    corpus: &LabeledCorpus,
    split: &FoldSplit,
    config: &TrainConfig,
    mut observer: impl FnMut(usize, &GcnModel<T>),
) -> Result<(GcnModel<T>, TrainHistory)> {
    let mut model = GcnModel::new(graph, config.clone())?;
    let readout = SentenceReadout::for_graph(graph, corpus)?;
    let tasks = &model.config.tasks;
    let train_sup = Supervision::from_records(corpus, &split.train, tasks);
    let val_sup = if split.val.is_empty() {
        train_sup.clone()
    } else {
        Supervision::from_records(corpus, &split.val, tasks)
    };
    if !tasks.is_empty() && train_sup.is_empty() {
        return Err(Error::NoLabeledTasks);
    }

    let mut history = TrainHistory::default();
    let mut best_val = f64::INFINITY;
    let mut best = model.snapshot();
    let mut since_best = 0;
    for epoch in 1..=config.max_epochs {
        let loss = model.forward(graph, &readout, &train_sup, true)?;
        if !loss.objective().is_finite() {
            return Err(Error::Divergence { epoch: Some(epoch) });
        }
        let grads = model.backward(graph, &readout)?;
        model.adam_step(&grads).map_err(|e| match e {
            Error::Divergence { .. } => Error::Divergence { epoch: Some(epoch) },
            other => other,
        })?;
        observer(epoch, &model);

        let val = model.evaluate_loss(graph, &readout, &val_sup)?.total.as_f64();
        if !val.is_finite() {
            return Err(Error::Divergence { epoch: Some(epoch) });
        }
        history.epochs.push(EpochRecord {
            epoch,
            l_mse: loss.mse.as_f64(),
            l_cla: loss.cla.as_f64(),
            l_total: loss.total.as_f64(),
            val_total: val,
            val_f1: supervision_f1(&model, graph, &readout, &val_sup)?,
        });
        history.stopped_epoch = epoch;
        if val < best_val {
            best_val = val;
            best = model.snapshot();
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                history.early_stopped = epoch < config.max_epochs;
                break;
            }
        }
    }
    model.restore(best);
    model.clear_cache();
    log::info!(
        "trained {} epochs (best {}, lambda {}, tasks {:?})",
        history.stopped_epoch,
        history.best_epoch,
        config.lambda,
        config.tasks.iter().map(|t| t.key()).collect::<Vec<_>>()
    );
    Ok((model, history))
}
