//! Run configuration: a TOML file with one table per stage, then command-line
//! overrides. The resolved result is written into every output directory.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use textgcn::corpus::{CorpusFormat, Task};
use textgcn::eval::ProbeConfig;
use textgcn::gcn::{Decoder, ReconstructionMode};
use textgcn::graph::{GraphKind, NormalizeMode};
use textgcn::mtl::TrainConfig;
use textgcn::walks::WalkConfig;

use crate::UserError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub path: Option<PathBuf>,
    /// Inferred from the file extension when absent.
    pub format: Option<CorpusFormat>,
    pub min_count: usize,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection { path: None, format: None, min_count: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    pub kind: GraphKind,
    pub window_size: usize,
    pub normalize: NormalizeMode,
    /// Neighbors kept per sentence in the sentence graph.
    pub k_neighbors: usize,
    /// word2vec text file with the word vectors the sentence graph averages.
    pub word_vectors: Option<PathBuf>,
}

impl Default for GraphSection {
    fn default() -> Self {
        GraphSection {
            kind: GraphKind::WS,
            window_size: 3,
            normalize: NormalizeMode::SymRenorm,
            k_neighbors: 10,
            word_vectors: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub folds: usize,
    /// Fold whose split single-run commands (train, sweep) use.
    pub fold: usize,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { folds: 5, fold: 0, val_fraction: 0.1, seed: 1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: CorpusSection,
    pub graph: GraphSection,
    pub train: TrainConfig,
    pub eval: EvalSection,
    pub walks: WalkConfig,
    pub probe: ProbeConfig,
}

impl RunConfig {
    /// Parses a config file; relative paths inside it resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = std::path::absolute(path)?;
        let base = base.parent().unwrap_or(Path::new("/"));
        for p in [&mut cfg.corpus.path, &mut cfg.graph.word_vectors].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn corpus_path(&self) -> Result<&Path> {
        self.corpus
            .path
            .as_deref()
            .ok_or_else(|| UserError::new("no corpus given; pass --corpus or set corpus.path").into())
    }

    pub fn corpus_format(&self) -> Result<CorpusFormat> {
        Ok(self.corpus.format.unwrap_or_else(|| CorpusFormat::from_path(self.corpus_path().unwrap_or(Path::new("")))))
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.walks.validate()?;
        let bad = |m: String| Err(UserError::new(m).into());
        if self.graph.window_size == 0 {
            return bad("graph.window_size must be at least 1".into());
        }
        if self.graph.k_neighbors == 0 {
            return bad("graph.k_neighbors must be at least 1".into());
        }
        if self.eval.fold >= self.eval.folds {
            return bad(format!("eval.fold {} out of range for {} folds", self.eval.fold, self.eval.folds));
        }
        if self.corpus.min_count == 0 {
            return bad("corpus.min_count must be at least 1".into());
        }
        Ok(())
    }
}

/// Flags shared by every command that reads a corpus. Each one overrides the
/// matching config key.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Labeled corpus (JSONL or TSV).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_parser = parse_via::<CorpusFormat>)]
    pub format: Option<CorpusFormat>,
    #[arg(long)]
    pub min_count: Option<usize>,

    /// w, s or ws.
    #[arg(long, value_parser = parse_via::<GraphKind>)]
    pub graph_kind: Option<GraphKind>,
    #[arg(long)]
    pub window_size: Option<usize>,
    /// sym or raw.
    #[arg(long, value_parser = parse_via::<NormalizeMode>)]
    pub normalize: Option<NormalizeMode>,
    #[arg(long)]
    pub k_neighbors: Option<usize>,
    #[arg(long)]
    pub word_vectors: Option<PathBuf>,

    #[arg(long)]
    pub lambda: Option<f64>,
    /// Comma-separated subset of sa,ei,hs,sar; an empty string trains a plain autoencoder.
    #[arg(long)]
    pub tasks: Option<String>,
    /// gcn or inner.
    #[arg(long, value_parser = parse_via::<Decoder>)]
    pub decoder: Option<Decoder>,
    /// dense or sampled.
    #[arg(long, value_parser = parse_reconstruction)]
    pub reconstruction: Option<ReconstructionMode>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,

    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub fold: Option<usize>,
    #[arg(long)]
    pub val_fraction: Option<f64>,
    /// Seed for training, fold assignment and walks alike.
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub walks_per_node: Option<usize>,
    #[arg(long)]
    pub walk_length: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub sg_window: Option<usize>,
    #[arg(long)]
    pub walk_dim: Option<usize>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub sgns_epochs: Option<usize>,
    /// Lock-free multi-threaded SGNS; results then depend on scheduling.
    #[arg(long)]
    pub parallel_sgns: bool,
}

fn parse_via<T: std::str::FromStr<Err = textgcn::Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: textgcn::Error| e.to_string())
}

fn parse_reconstruction(s: &str) -> std::result::Result<ReconstructionMode, String> {
    match s {
        "dense" => Ok(ReconstructionMode::Dense),
        "sampled" => Ok(ReconstructionMode::Sampled),
        other => Err(format!("unknown reconstruction mode {other:?}")),
    }
}

impl Overrides {
    /// Config file (or defaults) with every given flag applied, validated.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value.clone() {
                    $field = v;
                }
            };
        }
        if let Some(p) = &self.corpus {
            cfg.corpus.path = Some(std::path::absolute(p)?);
        }
        if let Some(f) = self.format {
            cfg.corpus.format = Some(f);
        }
        set!(cfg.corpus.min_count, self.min_count);
        set!(cfg.graph.kind, self.graph_kind);
        set!(cfg.graph.window_size, self.window_size);
        set!(cfg.graph.normalize, self.normalize);
        set!(cfg.graph.k_neighbors, self.k_neighbors);
        if let Some(p) = &self.word_vectors {
            cfg.graph.word_vectors = Some(std::path::absolute(p)?);
        }
        set!(cfg.train.lambda, self.lambda);
        if let Some(t) = &self.tasks {
            cfg.train.tasks = Task::parse_list(t)?;
        }
        set!(cfg.train.decoder, self.decoder);
        set!(cfg.train.reconstruction, self.reconstruction);
        set!(cfg.train.dim, self.dim);
        set!(cfg.train.max_epochs, self.max_epochs);
        set!(cfg.train.patience, self.patience);
        set!(cfg.train.dropout, self.dropout);
        set!(cfg.train.adam.learning_rate, self.learning_rate);
        set!(cfg.train.weight_decay, self.weight_decay);
        set!(cfg.eval.folds, self.folds);
        set!(cfg.eval.fold, self.fold);
        set!(cfg.eval.val_fraction, self.val_fraction);
        if let Some(seed) = self.seed {
            cfg.train.seed = seed;
            cfg.eval.seed = seed;
            cfg.walks.seed = seed;
        }
        set!(cfg.walks.walks_per_node, self.walks_per_node);
        set!(cfg.walks.walk_length, self.walk_length);
        set!(cfg.walks.p, self.p);
        set!(cfg.walks.q, self.q);
        set!(cfg.walks.sg_window, self.sg_window);
        set!(cfg.walks.dim, self.walk_dim);
        set!(cfg.walks.negatives, self.negatives);
        set!(cfg.walks.epochs, self.sgns_epochs);
        if self.parallel_sgns {
            cfg.walks.parallel_sgns = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
