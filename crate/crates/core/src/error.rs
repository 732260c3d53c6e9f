use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("unsupported layer: {0}")]
    UnsupportedLayer(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("output index {index} out of range for {len} outputs")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("invalid property: {0}")]
    InvalidProperty(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("box has no dimension with positive width to split")]
    Degenerate,

    #[error("grid of {requested} points exceeds the evaluation budget of {budget}")]
    BudgetExceeded { requested: u128, budget: u128 },

    #[error("cannot aggregate an empty list of reports")]
    EmptyReports,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
