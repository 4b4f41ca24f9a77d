use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{Supervision, TrainConfig};
use super::readout::SentenceReadout;
use super::train::{supervision_f1, train, TrainHistory};
use crate::corpus::{FoldSplit, LabeledCorpus};
use crate::error::{Error, Result};
use crate::graph::TextGraph;
use crate::scalar::Real;

/// Outcome of one training run in a λ sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    /// Reconstruction loss of the returned model (no dropout).
    pub l_mse: f64,
    /// Classification loss of the returned model on the training labels.
    pub l_cla: f64,
    /// Validation macro F1 per task in `Task::ALL` order.
    pub f1: [Option<f64>; 4],
    pub best_epoch: usize,
    pub stopped_epoch: usize,
    #[serde(skip)]
    pub history: TrainHistory,
}

/// Trains once per λ with the same seed and split; rows follow `lambdas` order.
/// Runs are independent and execute in parallel.
pub fn sweep_lambda<T: Real>(
    graph: &TextGraph<T>,
    corpus: &LabeledCorpus,
    split: &FoldSplit,
    config: &TrainConfig,
    lambdas: &[f64],
) -> Result<Vec<SweepRow>> {
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument("lambda list is empty".into()));
    }
    let readout = SentenceReadout::for_graph(graph, corpus)?;
    let train_sup = Supervision::from_records(corpus, &split.train, &config.tasks);
    let val_sup = if split.val.is_empty() {
        train_sup.clone()
    } else {
        Supervision::from_records(corpus, &split.val, &config.tasks)
    };
    lambdas
        .par_iter()
        .map(|&lambda| {
            let cfg = TrainConfig {
                lambda,
                ..config.clone()
            };
            let (model, history) = train(graph, corpus, split, &cfg)?;
            let loss = model.evaluate_loss(graph, &readout, &train_sup)?;
            Ok(SweepRow {
                lambda,
                l_mse: loss.mse.as_f64(),
                l_cla: loss.cla.as_f64(),
                f1: supervision_f1(&model, graph, &readout, &val_sup)?,
                best_epoch: history.best_epoch,
                stopped_epoch: history.stopped_epoch,
                history,
            })
        })
        .collect()
}

/// Averages rows of several folds λ-by-λ. All inputs must share the λ list.
pub fn mean_rows(per_fold: &[Vec<SweepRow>]) -> Result<Vec<SweepRow>> {
    let first = per_fold
        .first()
        .ok_or_else(|| Error::InvalidArgument("no sweep results to average".into()))?;
    let n = per_fold.len() as f64;
    let mut out = Vec::with_capacity(first.len());
    for (i, row) in first.iter().enumerate() {
        let rows: Vec<&SweepRow> = per_fold.iter().map(|f| &f[i]).collect();
        if rows.iter().any(|r| r.lambda != row.lambda) {
            return Err(Error::InvalidArgument("folds were swept over different lambdas".into()));
        }
        let mut f1 = [None; 4];
        for (t, slot) in f1.iter_mut().enumerate() {
            let vals: Vec<f64> = rows.iter().filter_map(|r| r.f1[t]).collect();
            if !vals.is_empty() {
                *slot = Some(vals.iter().sum::<f64>() / vals.len() as f64);
            }
        }
        out.push(SweepRow {
            lambda: row.lambda,
            l_mse: rows.iter().map(|r| r.l_mse).sum::<f64>() / n,
            l_cla: rows.iter().map(|r| r.l_cla).sum::<f64>() / n,
            f1,
            best_epoch: row.best_epoch,
            stopped_epoch: row.stopped_epoch,
            history: TrainHistory::default(),
        });
    }
    Ok(out)
}

/// `lambda,l_mse,l_cla,f1_sa,f1_ei,f1_hs,f1_sar,best_epoch,stopped_epoch`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("lambda,l_mse,l_cla,f1_sa,f1_ei,f1_hs,f1_sar,best_epoch,stopped_epoch\n");
    for r in rows {
        write!(out, "{},{},{}", r.lambda, r.l_mse, r.l_cla).unwrap();
        for f in r.f1 {
            out.push(',');
            if let Some(f) = f {
                write!(out, "{f}").unwrap();
            }
        }
        writeln!(out, ",{},{}", r.best_epoch, r.stopped_epoch).unwrap();
    }
    out
}

/// Per-epoch curves of every run in long format:
/// `lambda,epoch,l_mse,l_cla,l_total,val_total`.
pub fn sweep_series_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("lambda,epoch,l_mse,l_cla,l_total,val_total\n");
    for r in rows {
        for e in &r.history.epochs {
            writeln!(out, "{},{},{},{},{},{}", r.lambda, e.epoch, e.l_mse, e.l_cla, e.l_total, e.val_total).unwrap();
        }
    }
    out
}
