use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("cluster is empty")]
    EmptyCluster,

    #[error("degenerate model{}: {reason}", cluster.map(|c| format!(" in cluster {c}")).unwrap_or_default())]
    Degenerate { cluster: Option<usize>, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported setting: {0}")]
    Unsupported(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse { row: usize, column: usize, message: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("output document error: {0}")]
    Document(String),
}

impl Error {
    pub(crate) fn degenerate(cluster: Option<usize>, reason: impl Into<String>) -> Self {
        Error::Degenerate {
            cluster,
            reason: reason.into(),
        }
    }

    /// Short, stable name of the error class, used on the CLI diagnostic stream.
    pub fn class(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } | Error::InvalidInput(_) => "input",
            Error::EmptyCluster => "empty-cluster",
            Error::Degenerate { .. } => "degenerate-model",
            Error::Config(_) => "config",
            Error::Precondition(_) => "precondition",
            Error::Unsupported(_) => "unsupported",
            Error::Parse { .. } | Error::Csv(_) => "parse",
            Error::Io(_) => "io",
            Error::Document(_) => "document",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
