use thiserror::Error;

use crate::Vector;

pub type Result<T> = std::result::Result<T, Error>;

/// Last finite iterate seen before a run blew up.
#[derive(Debug, Clone)]
pub struct LastGoodState {
    pub k: usize,
    pub x: Vector,
    pub lambda: Vector,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("missing capability: {0}")]
    Capability(String),

    #[error("numerical failure: {message} (condition estimate {condition:.3e})")]
    Numerical { message: String, condition: f64 },

    #[error("iterates diverged at k={}", .0.k)]
    Diverged(Box<LastGoodState>),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("reference oracle failed: {message}")]
    OracleFailure {
        message: String,
        candidates: Vec<Vector>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("output already exists: {0}")]
    OutputExists(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            got,
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn capability(msg: impl Into<String>) -> Self {
        Error::Capability(msg.into())
    }
}

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::dim(context, expected, got))
    }
}
