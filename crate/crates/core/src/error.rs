use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("linear system has no solution")]
    NoSolution,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid code: {}", .0.join("; "))]
    InvalidCode(Vec<String>),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("enumeration needs {required} terms, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("fingerprint mismatch: expected {expected}, model carries {found:?}")]
    FingerprintMismatch { expected: String, found: String },

    #[error("decoder contract violated: {0}")]
    Contract(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
