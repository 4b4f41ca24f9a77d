use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use ndarray::{s, Array2};
use serde::Serialize;
use textgcn::corpus::{build_vocabulary, load_corpus, make_folds, FoldPlan, LabeledCorpus, Task, Vocabulary};
use textgcn::embedding::EmbeddingTable;
use textgcn::eval::{
    cross_validate_features, cross_validate_on, evaluate_split, nearest_neighbors, ConfusionMatrix, FoldMetrics,
    GraphRecipe, MetricsReport,
};
use textgcn::graph::{read_graph_file, sentence_key, write_graph_file, GraphKind, TextGraph};
use textgcn::mtl::{embed_sentences_from_words, mean_rows, sweep_csv, sweep_lambda, sweep_series_csv, train as fit, SentenceReadout};
use textgcn::walks::{generate_walks, sgns_train};
use textgcn::{GcnModelF64, TextGraphF64};

use crate::config::{Overrides, RunConfig};
use crate::output::RunDir;
use crate::UserError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmbedTarget {
    /// Word node rows of `Z`.
    Words,
    /// Sentence embeddings the task heads see.
    SentencesGae,
    /// Mean of each sentence's word embeddings.
    SentencesAvg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

struct Inputs {
    corpus: LabeledCorpus,
    vocab: Vocabulary,
}

fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let path = cfg.corpus_path()?;
    let mut corpus =
        load_corpus(path, cfg.corpus_format()?).with_context(|| format!("loading corpus {}", path.display()))?;
    let vocab = build_vocabulary(&mut corpus, cfg.corpus.min_count)?;
    log::info!("corpus {}: {} sentences, {} word types", path.display(), corpus.len(), vocab.len());
    Ok(Inputs { corpus, vocab })
}

fn recipe(cfg: &RunConfig) -> Result<GraphRecipe> {
    let g = &cfg.graph;
    Ok(match g.kind {
        GraphKind::W => GraphRecipe::Word { window_size: g.window_size, normalize: g.normalize },
        GraphKind::WS => GraphRecipe::WordSentence { window_size: g.window_size, normalize: g.normalize },
        GraphKind::S => {
            let path = g
                .word_vectors
                .as_deref()
                .ok_or_else(|| UserError::new("the sentence graph needs word vectors; pass --word-vectors"))?;
            let word_vectors = EmbeddingTable::read_word2vec(path)
                .with_context(|| format!("reading word vectors {}", path.display()))?;
            GraphRecipe::Sentence { word_vectors, k_neighbors: g.k_neighbors, normalize: g.normalize }
        }
    })
}

/// Reads `graph_file` when given (its kind wins over the config), otherwise
/// builds the configured graph from the corpus.
fn obtain_graph(cfg: &mut RunConfig, inputs: &Inputs, graph_file: Option<&Path>) -> Result<TextGraphF64> {
    let graph = match graph_file {
        Some(path) => {
            let file = read_graph_file::<f64>(path).with_context(|| format!("reading graph {}", path.display()))?;
            if file.kind != cfg.graph.kind {
                log::warn!("graph file is kind {}, overriding configured kind {}", file.kind, cfg.graph.kind);
                cfg.graph.kind = file.kind;
            }
            TextGraph::from_adjacency(
                file.kind,
                file.matrix,
                inputs.vocab.len(),
                inputs.corpus.len(),
                cfg.graph.normalize,
            )
            .with_context(|| format!("graph {} does not match the corpus", path.display()))?
        }
        None => recipe(cfg)?.build(&inputs.corpus, &inputs.vocab)?,
    };
    log::info!("graph {}: {} nodes, {} stored entries", graph.kind, graph.n_nodes(), graph.adjacency.nnz());
    Ok(graph)
}

fn fold_plan(cfg: &RunConfig, inputs: &Inputs) -> Result<FoldPlan> {
    Ok(make_folds(inputs.corpus.len(), cfg.eval.folds, cfg.eval.seed, cfg.eval.val_fraction)?)
}

#[derive(Serialize)]
struct GraphStats {
    kind: GraphKind,
    nodes: usize,
    words: usize,
    sentences: usize,
    nnz: usize,
    self_loops: usize,
    /// Undirected edges, diagonal excluded.
    word_word_edges: usize,
    word_sentence_edges: usize,
    sentence_sentence_edges: usize,
}

fn graph_stats(g: &TextGraphF64) -> GraphStats {
    let mut st = GraphStats {
        kind: g.kind,
        nodes: g.n_nodes(),
        words: g.n_words,
        sentences: g.n_sentences,
        nnz: g.adjacency.nnz(),
        self_loops: 0,
        word_word_edges: 0,
        word_sentence_edges: 0,
        sentence_sentence_edges: 0,
    };
    for (i, j, _) in g.adjacency.triplets() {
        if i == j {
            st.self_loops += 1;
        } else if i < j {
            match (i < g.n_words, j < g.n_words) {
                (true, true) => st.word_word_edges += 1,
                (true, false) => st.word_sentence_edges += 1,
                _ => st.sentence_sentence_edges += 1,
            }
        }
    }
    st
}

pub fn build_graph(run: &Overrides, out: &Path) -> Result<()> {
    let mut cfg = run.resolve()?;
    let inputs = load_inputs(&cfg)?;
    let graph = obtain_graph(&mut cfg, &inputs, None)?;
    let dir = RunDir::create(out, &cfg)?;
    write_graph_file(dir.file("graph.tg1"), graph.kind, &graph.adjacency)?;
    let stats = graph_stats(&graph);
    dir.write("stats.json", serde_json::to_string_pretty(&stats)? + "\n")?;
    let mut vocab = String::from("token\tcount\n");
    for (t, c) in inputs.vocab.tokens().iter().zip(inputs.vocab.counts()) {
        writeln!(vocab, "{t}\t{c}")?;
    }
    dir.write("vocab.tsv", vocab)?;
    log::info!(
        "{} word-word, {} word-sentence, {} sentence-sentence edges",
        stats.word_word_edges,
        stats.word_sentence_edges,
        stats.sentence_sentence_edges
    );
    dir.finish()
}

pub fn train(run: &Overrides, graph_file: Option<&Path>, out: &Path) -> Result<()> {
    let mut cfg = run.resolve()?;
    let inputs = load_inputs(&cfg)?;
    let graph = obtain_graph(&mut cfg, &inputs, graph_file)?;
    let split = fold_plan(&cfg, &inputs)?.split(cfg.eval.fold)?;
    let dir = RunDir::create(out, &cfg)?;
    log::info!(
        "fold {}: {} train, {} val, {} test; tasks [{}], lambda {}",
        cfg.eval.fold,
        split.train.len(),
        split.val.len(),
        split.test.len(),
        task_list(&cfg.train.tasks),
        cfg.train.lambda
    );
    let (mut model, history) = fit(&graph, &inputs.corpus, &split, &cfg.train)?;
    for e in &history.epochs {
        log::debug!("epoch {:>3} l_mse {:.6} l_cla {:.6} l_total {:.6} val {:.6}", e.epoch, e.l_mse, e.l_cla, e.l_total, e.val_total);
    }
    model.meta.insert("best_epoch".into(), history.best_epoch.to_string());
    model.meta.insert("stopped_epoch".into(), history.stopped_epoch.to_string());
    model.meta.insert("fold".into(), cfg.eval.fold.to_string());
    model.save(dir.file("model.ckpt"))?;
    dir.write("history.csv", history.to_csv())?;
    dir.write("history.json", serde_json::to_string_pretty(&history)? + "\n")?;
    if let Some(best) = history.best() {
        log::info!(
            "best epoch {} of {}{}: l_mse {:.6} l_cla {:.6} val {:.6}",
            best.epoch,
            history.stopped_epoch,
            if history.early_stopped { " (early stop)" } else { "" },
            best.l_mse,
            best.l_cla,
            best.val_total
        );
    }
    dir.finish()
}

fn task_list(tasks: &[Task]) -> String {
    tasks.iter().map(|t| t.key()).collect::<Vec<_>>().join(",")
}

/// Model from `path` plus the graph it was trained on; the checkpoint's graph
/// kind and task set override the config.
fn load_model(cfg: &mut RunConfig, path: &Path, inputs: &Inputs, graph_file: Option<&Path>) -> Result<(GcnModelF64, TextGraphF64)> {
    let model = GcnModelF64::load(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    if model.graph_kind != cfg.graph.kind {
        log::info!("checkpoint was trained on a {} graph", model.graph_kind);
        cfg.graph.kind = model.graph_kind;
    }
    cfg.train = model.config.clone();
    let graph = obtain_graph(cfg, inputs, graph_file)?;
    if graph.kind != model.graph_kind || graph.n_nodes() != model.n_nodes() {
        return Err(UserError::new(format!(
            "checkpoint expects a {} graph with {} nodes, got {} with {}",
            model.graph_kind,
            model.n_nodes(),
            graph.kind,
            graph.n_nodes()
        ))
        .into());
    }
    Ok((model, graph))
}

pub fn evaluate(
    run: &Overrides,
    graph_file: Option<&Path>,
    checkpoint: Option<&Path>,
    cv: bool,
    split_name: &str,
    out: &Path,
) -> Result<()> {
    let mut cfg = run.resolve()?;
    let inputs = load_inputs(&cfg)?;
    let plan = fold_plan(&cfg, &inputs)?;
    let report = match checkpoint {
        Some(ck) if !cv => {
            let (model, graph) = load_model(&mut cfg, ck, &inputs, graph_file)?;
            let split = plan.split(cfg.eval.fold)?;
            let records: Vec<usize> = match split_name {
                "train" => split.train,
                "val" => split.val,
                "test" => split.test,
                "all" => (0..inputs.corpus.len()).collect(),
                other => return Err(UserError::new(format!("unknown split {other:?}; use train, val, test or all")).into()),
            };
            let meta = |k: &str| model.meta.get(k).and_then(|v| v.parse().ok()).unwrap_or(0);
            let tasks = evaluate_split(&model, &graph, &inputs.corpus, &records)?;
            MetricsReport::from_folds(vec![FoldMetrics {
                fold: cfg.eval.fold,
                best_epoch: meta("best_epoch"),
                stopped_epoch: meta("stopped_epoch"),
                tasks,
            }])
        }
        _ => {
            let graph = obtain_graph(&mut cfg, &inputs, graph_file)?;
            log::info!("{}-fold cross-validation", plan.k);
            cross_validate_on(&graph, &inputs.corpus, &plan, &cfg.train)?
        }
    };
    let dir = RunDir::create(out, &cfg)?;
    write_report(&dir, "", &report)?;
    dir.finish()
}

/// `report.json`, `report.txt` and confusion CSVs (counts and row percentages,
/// per fold and summed over folds) under `prefix`.
fn write_report(dir: &RunDir, prefix: &str, report: &MetricsReport) -> Result<()> {
    dir.write(&format!("{prefix}report.json"), report.to_json() + "\n")?;
    let mut text = report.to_table();
    text.push_str("\nheadline (weighted F1 for hs, macro F1 otherwise)\n");
    for m in &report.mean {
        writeln!(text, "{:<5} {:.4}", m.task, m.headline)?;
        log::info!("{:<4} macro F1 {:.4} weighted F1 {:.4} accuracy {:.4}", m.task, m.macro_f1, m.weighted_f1, m.accuracy);
    }
    dir.write(&format!("{prefix}report.txt"), text)?;
    let mut summed: BTreeMap<Task, ConfusionMatrix> = BTreeMap::new();
    for f in &report.folds {
        for t in &f.tasks {
            let names = t.task.class_names();
            dir.write(&format!("{prefix}confusion/fold{}_{}.csv", f.fold, t.task), t.confusion.to_csv(names))?;
            let acc = summed
                .entry(t.task)
                .or_insert_with(|| ConfusionMatrix { counts: vec![vec![0; t.task.n_classes()]; t.task.n_classes()] });
            for (row, add) in acc.counts.iter_mut().zip(&t.confusion.counts) {
                for (a, b) in row.iter_mut().zip(add) {
                    *a += b;
                }
            }
        }
    }
    for (task, cm) in summed {
        dir.write(&format!("{prefix}confusion/{task}.csv"), cm.to_csv(task.class_names()))?;
        dir.write(&format!("{prefix}confusion/{task}_percent.csv"), cm.to_percent_csv(task.class_names()))?;
    }
    Ok(())
}

pub fn embed(run: &Overrides, graph_file: Option<&Path>, checkpoint: &Path, target: EmbedTarget, out: &Path) -> Result<()> {
    let mut cfg = run.resolve()?;
    let inputs = load_inputs(&cfg)?;
    let (model, graph) = load_model(&mut cfg, checkpoint, &inputs, graph_file)?;
    let z = model.node_embeddings(&graph)?;
    let need_words = || -> Result<()> {
        if graph.has_word_nodes() {
            Ok(())
        } else {
            Err(UserError::new(format!("a {} graph has no word nodes", graph.kind)).into())
        }
    };
    let sentence_keys = || inputs.corpus.records.iter().map(|r| sentence_key(r.id)).collect::<Vec<_>>();
    let (name, table) = match target {
        EmbedTarget::Words => {
            need_words()?;
            let rows = z.slice(s![..graph.n_words, ..]).to_owned();
            ("words.vec", EmbeddingTable::new(inputs.vocab.tokens().to_vec(), rows)?)
        }
        EmbedTarget::SentencesGae => {
            let readout = SentenceReadout::for_graph(&graph, &inputs.corpus)?;
            ("sentences-gae.vec", EmbeddingTable::new(sentence_keys(), readout.apply(z.view())?)?)
        }
        EmbedTarget::SentencesAvg => {
            need_words()?;
            let avg = embed_sentences_from_words(z.slice(s![..graph.n_words, ..]), &inputs.corpus)?;
            ("sentences-avg.vec", EmbeddingTable::new(sentence_keys(), avg)?)
        }
    };
    let dir = RunDir::create(out, &cfg)?;
    table.write_word2vec(dir.file(name))?;
    log::info!("{} vectors of dimension {} in {name}", table.len(), table.dim());
    dir.finish()
}

pub fn neighbors(embeddings: &Path, query: &str, k: usize, format: ReportFormat) -> Result<()> {
    if k == 0 {
        return Err(UserError::new("k must be at least 1").into());
    }
    let table = EmbeddingTable::<f64>::read_word2vec(embeddings)
        .with_context(|| format!("reading embeddings {}", embeddings.display()))?;
    let hits = nearest_neighbors(&table, query, k)?;
    let text = match format {
        ReportFormat::Text => {
            let mut s = String::new();
            for (rank, (token, cos)) in hits.iter().enumerate() {
                writeln!(s, "{}\t{token}\t{cos:.6}", rank + 1)?;
            }
            s
        }
        ReportFormat::Json => {
            let rows: Vec<_> = hits.iter().map(|(t, c)| serde_json::json!({ "token": t, "cosine": c })).collect();
            serde_json::to_string_pretty(&serde_json::json!({ "query": query, "neighbors": rows }))? + "\n"
        }
    };
    print!("{text}");
    Ok(())
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>> {
    let items: Vec<T> = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| UserError::new(format!("bad {what} {s:?}"))))
        .collect::<std::result::Result<_, _>>()?;
    if items.is_empty() {
        return Err(UserError::new(format!("empty {what} list")).into());
    }
    Ok(items)
}

pub fn sweep(run: &Overrides, graph_file: Option<&Path>, lambdas: &str, all_folds: bool, out: &Path) -> Result<()> {
    let mut cfg = run.resolve()?;
    let lambdas: Vec<f64> = parse_list(lambdas, "lambda")?;
    let inputs = load_inputs(&cfg)?;
    let graph = obtain_graph(&mut cfg, &inputs, graph_file)?;
    let plan = fold_plan(&cfg, &inputs)?;
    let dir = RunDir::create(out, &cfg)?;
    let folds: Vec<usize> = if all_folds { (0..plan.k).collect() } else { vec![cfg.eval.fold] };
    let mut per_fold = Vec::new();
    for &fold in &folds {
        log::info!("fold {fold}: lambda {lambdas:?}");
        let rows = sweep_lambda(&graph, &inputs.corpus, &plan.split(fold)?, &cfg.train, &lambdas)?;
        if all_folds {
            dir.write(&format!("sweep_fold{fold}.csv"), sweep_csv(&rows))?;
            dir.write(&format!("sweep_series_fold{fold}.csv"), sweep_series_csv(&rows))?;
        } else {
            dir.write("sweep_series.csv", sweep_series_csv(&rows))?;
        }
        per_fold.push(rows);
    }
    let rows = mean_rows(&per_fold)?;
    for r in &rows {
        log::info!("lambda {:<5} l_mse {:.6} l_cla {:.6}", r.lambda, r.l_mse, r.l_cla);
    }
    dir.write("sweep.csv", sweep_csv(&rows))?;
    dir.finish()
}

/// Sentence features from node embeddings: sentence rows when the graph has
/// sentence nodes, word averages otherwise.
fn sentence_features(graph: &TextGraphF64, nodes: &Array2<f64>, corpus: &LabeledCorpus) -> Result<Array2<f64>> {
    if graph.has_sentence_nodes() {
        Ok(nodes.slice(s![graph.n_words.., ..]).to_owned())
    } else {
        Ok(embed_sentences_from_words(nodes.view(), corpus)?)
    }
}

pub fn walks(run: &Overrides, graph_file: Option<&Path>, window_sizes: Option<&str>, evaluate: bool, out: &Path) -> Result<()> {
    let cfg = run.resolve()?;
    let sizes: Vec<usize> = match window_sizes {
        Some(raw) => parse_list(raw, "window size")?,
        None => vec![cfg.graph.window_size],
    };
    if sizes.contains(&0) {
        return Err(UserError::new("window sizes must be at least 1").into());
    }
    let inputs = load_inputs(&cfg)?;
    let plan = if evaluate { Some(fold_plan(&cfg, &inputs)?) } else { None };
    let dir = RunDir::create(out, &cfg)?;
    let nested = sizes.len() > 1;
    let mut summary = String::from("window_size,task,macro_f1,weighted_f1,headline\n");
    for &w in &sizes {
        let mut c = cfg.clone();
        c.graph.window_size = w;
        let graph = obtain_graph(&mut c, &inputs, graph_file)?;
        let prefix = if nested { format!("ws{w}/") } else { String::new() };
        if nested {
            dir.write(&format!("{prefix}config.toml"), c.to_toml())?;
        }
        let walks = generate_walks(&graph, &c.walks)?;
        log::info!("window {w}: {} walks, {} steps (p {}, q {})", walks.walks.len(), walks.total_steps(), c.walks.p, c.walks.q);
        dir.write(&format!("{prefix}walks.txt"), walks.to_text())?;
        let model = sgns_train(&walks, &c.walks)?;
        let mut losses = String::from("epoch,loss\n");
        for (e, l) in model.epoch_losses.iter().enumerate() {
            writeln!(losses, "{},{l}", e + 1)?;
        }
        dir.write(&format!("{prefix}sgns_loss.csv"), losses)?;
        let table = model.embedding_table(graph.node_keys(&inputs.vocab, &inputs.corpus))?;
        table.write_word2vec(dir.file(&format!("{prefix}embeddings.vec")))?;
        if let Some(plan) = &plan {
            let features = sentence_features(&graph, &model.input, &inputs.corpus)?;
            let report = cross_validate_features(features.view(), &inputs.corpus, plan, &c.probe)?;
            write_report(&dir, &prefix, &report)?;
            for m in &report.mean {
                writeln!(summary, "{w},{},{},{},{}", m.task, m.macro_f1, m.weighted_f1, m.headline)?;
            }
        }
    }
    if evaluate {
        dir.write("summary.csv", summary)?;
    }
    dir.finish()
}
