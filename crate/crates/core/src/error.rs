use thiserror::Error;

/// Errors raised by corpus ingestion, graph construction, training and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown label {value:?} for task {task}")]
    UnknownLabel { line: usize, task: String, value: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("vocabulary is empty after applying min_count={min_count}")]
    EmptyVocabulary { min_count: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("node {node} has zero degree; symmetric normalization is undefined")]
    ZeroDegree { node: usize },

    #[error("divergence detected{}", .epoch.map(|e| format!(" at epoch {e}")).unwrap_or_default())]
    Divergence { epoch: Option<usize> },

    #[error("backward called without a cached forward pass")]
    MissingForwardState,

    #[error("all tasks have zero labeled sentences")]
    NoLabeledTasks,

    #[error("unknown query {query:?}; closest vocabulary entries: {}", .suggestions.join(", "))]
    UnknownQuery {
        query: String,
        suggestions: Vec<String>,
    },

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(context: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::ShapeMismatch {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn format(what: &'static str, message: impl Into<String>) -> Self {
        Error::Format {
            what,
            message: message.into(),
        }
    }

    /// True when the error stems from user input (bad files, arguments, queries)
    /// rather than an internal failure.
    pub fn is_user_error(&self) -> bool {
        match self {
            Error::Io(_)
            | Error::Parse { .. }
            | Error::UnknownLabel { .. }
            | Error::EmptyCorpus
            | Error::EmptyVocabulary { .. }
            | Error::InvalidArgument(_)
            | Error::UnknownQuery { .. }
            | Error::NoLabeledTasks
            | Error::Format { .. }
            | Error::ShapeMismatch { .. } => true,
            Error::ZeroDegree { .. } | Error::Divergence { .. } | Error::MissingForwardState => false,
        }
    }
}
