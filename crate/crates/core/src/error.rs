use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A row of an input file could not be accepted. `line` is 1-based and
    /// counts the header.
    #[error("{path}:{line}: {message}")]
    Ingest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("schema mismatch in {path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("panel construction: {0}")]
    Panel(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("series too short: need at least {required} observations, got {actual}")]
    TooShort { required: usize, actual: usize },

    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),

    #[error("rank-deficient regression in equation {equation}")]
    RankDeficient { equation: usize },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("numerically singular covariance at week {week}: condition estimate {condition:.3e}")]
    Singular { week: usize, condition: f64 },

    #[error("non-finite likelihood at week {week}")]
    NonFinite { week: usize },

    #[error("standard errors require a stationary point: gradient inf-norm {gradient_norm:.3e} exceeds {limit:.3e}")]
    NotStationary { gradient_norm: f64, limit: f64 },

    #[error("Hessian is not negative definite: eigenvalue {eigenvalue:.6e} at index {index}")]
    IndefiniteHessian { index: usize, eigenvalue: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
