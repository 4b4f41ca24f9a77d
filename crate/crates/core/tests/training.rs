use textgcn::corpus::{build_vocabulary, make_folds, Task};
use textgcn::graph::{build_ws_graph, NormalizeMode};
use textgcn::mtl::{sweep_lambda, train, TrainConfig};
use textgcn::synthetic::{two_cluster_corpus, TwoClusterSpec};

fn setup() -> (textgcn::corpus::LabeledCorpus, textgcn::TextGraphF64) {
    let mut corpus = two_cluster_corpus(&TwoClusterSpec::default());
    let vocab = build_vocabulary(&mut corpus, 1).unwrap();
    let graph = build_ws_graph(&corpus, &vocab, 3, NormalizeMode::SymRenorm).unwrap();
    (corpus, graph)
}

fn config() -> TrainConfig {
    let mut cfg = TrainConfig { dim: 32, weight_decay: 5e-5, dropout: 0.0, ..TrainConfig::default() };
    cfg.adam.learning_rate = 0.02;
    cfg
}

// Regression bound from the first end-to-end run (final value about 0.03).
#[test]
fn two_cluster_classification_loss_drops_below_bound() {
    let (corpus, graph) = setup();
    let split = make_folds(corpus.len(), 5, 1, 0.1).unwrap().split(0).unwrap();
    let (_, history) = train(&graph, &corpus, &split, &config()).unwrap();
    let best = history.best().unwrap();
    assert!(best.l_cla < 0.1, "train classification loss {}", best.l_cla);
    assert!(history.epochs.len() <= 100);
    let min_val = history.epochs.iter().map(|e| e.val_total).fold(f64::INFINITY, f64::min);
    assert_eq!(best.val_total, min_val);
}

#[test]
fn early_stop_gap_is_at_least_patience() {
    let (corpus, graph) = setup();
    let split = make_folds(corpus.len(), 5, 1, 0.1).unwrap().split(1).unwrap();
    let cfg = TrainConfig { dim: 8, patience: 3, ..TrainConfig::default() };
    let (_, h) = train(&graph, &corpus, &split, &cfg).unwrap();
    if h.early_stopped {
        assert!(h.stopped_epoch - h.best_epoch >= cfg.patience);
    }
}

#[test]
fn sweep_rows_follow_input_and_duplicates_match() {
    let (corpus, graph) = setup();
    let split = make_folds(corpus.len(), 5, 1, 0.1).unwrap().split(0).unwrap();
    let cfg = TrainConfig { dim: 8, max_epochs: 8, patience: 3, ..TrainConfig::default() };
    let rows = sweep_lambda(&graph, &corpus, &split, &cfg, &[0.5, 0.0, 0.5]).unwrap();
    assert_eq!(rows.iter().map(|r| r.lambda).collect::<Vec<_>>(), vec![0.5, 0.0, 0.5]);
    assert_eq!(rows[0], rows[2]);
    assert!(sweep_lambda(&graph, &corpus, &split, &cfg, &[]).is_err());
}

#[test]
fn single_task_run_trains_only_that_head() {
    let (corpus, graph) = setup();
    let split = make_folds(corpus.len(), 5, 1, 0.1).unwrap().split(0).unwrap();
    let cfg = TrainConfig { dim: 8, max_epochs: 5, patience: 3, tasks: vec![Task::Ei], ..TrainConfig::default() };
    let (model, h) = train(&graph, &corpus, &split, &cfg).unwrap();
    assert_eq!(model.heads.len(), 1);
    assert!(h.epochs.iter().all(|e| e.val_f1[Task::Sa.index()].is_none() && e.val_f1[Task::Ei.index()].is_some()));
}
