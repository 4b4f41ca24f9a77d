//! `textgcn`: build text graphs, train MT-Text GCN models, run random-walk
//! baselines and evaluate them from the shell.
//!
//! Exit codes: 0 success, 1 internal error, 2 user or configuration error.
//! `TEXTGCN_THREADS` sets the worker thread count.

mod commands;
mod config;
mod output;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{EmbedTarget, ReportFormat};
use crate::config::Overrides;

pub const THREADS_VAR: &str = "TEXTGCN_THREADS";

/// An error caused by the invocation rather than by a bug.
#[derive(Debug)]
pub struct UserError(String);

impl UserError {
    pub fn new(msg: impl Into<String>) -> Self {
        UserError(msg.into())
    }
}

impl fmt::Display for UserError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UserError {}

#[derive(Parser)]
#[command(name = "textgcn", version, about = "Text graphs, multi-task GCN autoencoders and random-walk baselines")]
struct Cli {
    /// More log output (-v debug, -vv trace).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a graph file with stats and vocabulary.
    BuildGraph {
        #[command(flatten)]
        run: Overrides,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model on the configured fold's split.
    Train {
        #[command(flatten)]
        run: Overrides,
        /// Prebuilt graph; rebuilt from the corpus when absent.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a checkpoint, or cross-validate from scratch.
    Evaluate {
        #[command(flatten)]
        run: Overrides,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, conflicts_with = "cross_validate", required_unless_present = "cross_validate")]
        checkpoint: Option<PathBuf>,
        /// Train and score one model per fold.
        #[arg(long)]
        cross_validate: bool,
        /// Records a checkpoint is scored on: train, val, test or all.
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export embeddings in word2vec text format.
    Embed {
        #[command(flatten)]
        run: Overrides,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_enum)]
        target: EmbedTarget,
        #[arg(long)]
        out: PathBuf,
    },
    /// Nearest neighbors of a token in an embedding file.
    Neighbors {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(short, long, default_value_t = 8)]
        k: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
    },
    /// Train once per lambda and tabulate the final losses.
    SweepLambda {
        #[command(flatten)]
        run: Overrides,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value = "0,0.2,0.5,1.0")]
        lambdas: String,
        /// Repeat on every fold and average.
        #[arg(long)]
        all_folds: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// DeepWalk/Node2Vec walks and skip-gram embeddings.
    Walks {
        #[command(flatten)]
        run: Overrides,
        #[arg(long, conflicts_with = "window_sizes")]
        graph: Option<PathBuf>,
        /// One run per co-occurrence window size, e.g. 2,3,4.
        #[arg(long)]
        window_sizes: Option<String>,
        /// Cross-validate a linear classifier on the sentence embeddings.
        #[arg(long)]
        evaluate: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| UserError::new(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    match cli.command {
        Command::BuildGraph { run, out } => commands::build_graph(&run, &out),
        Command::Train { run, graph, out } => commands::train(&run, graph.as_deref(), &out),
        Command::Evaluate { run, graph, checkpoint, cross_validate, split, out } => {
            commands::evaluate(&run, graph.as_deref(), checkpoint.as_deref(), cross_validate, &split, &out)
        }
        Command::Embed { run, graph, checkpoint, target, out } => {
            commands::embed(&run, graph.as_deref(), &checkpoint, target, &out)
        }
        Command::Neighbors { embeddings, query, k, format } => commands::neighbors(&embeddings, &query, k, format),
        Command::SweepLambda { run, graph, lambdas, all_folds, out } => {
            commands::sweep(&run, graph.as_deref(), &lambdas, all_folds, &out)
        }
        Command::Walks { run, graph, window_sizes, evaluate, out } => {
            commands::walks(&run, graph.as_deref(), window_sizes.as_deref(), evaluate, &out)
        }
    }
}

/// 2 for errors rooted in user input, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<textgcn::Error>() {
            return if e.is_user_error() { 2 } else { 1 };
        }
        if cause.is::<UserError>() || cause.is::<toml::de::Error>() || cause.is::<std::io::Error>() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Warn,
        (false, 0) => log::LevelFilter::Info,
        (false, 1) => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    output::init_logging(level);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code(&err);
            log::logger().flush();
            let _ = writeln!(std::io::stderr(), "error: {err:#}");
            ExitCode::from(code)
        }
    }
}
