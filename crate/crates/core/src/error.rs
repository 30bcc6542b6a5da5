use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Input data does not follow the expected layout (too many malformed
    /// lines, wrong CSV header, unreadable model file).
    #[error("format error: {0}")]
    Format(String),

    /// Caller-supplied parameters are outside the documented range.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A recorded NLU payload violates the response schema.
    #[error("NLU response parse error: {0}")]
    NluParse(String),

    #[error("training diverged (non-finite loss at epoch {epoch}) with learning rate {lr}")]
    Diverged { lr: f64, epoch: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Broken internal invariant; maps to the "internal error" exit code.
    #[error("internal consistency error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the program itself rather than its inputs.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}
