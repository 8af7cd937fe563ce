//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-positive material at x = {x}: eps = {eps}, mu = {mu}")]
    NonPositiveMaterial { x: f64, eps: f64, mu: f64 },

    #[error("x = {x} outside tabulated domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("grid point {index}: {source}")]
    AtGridPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error(
        "inverse iteration failed to converge for eigenvalue {eigenvalue} (residual {residual:e})"
    )]
    ConvergenceFailure { eigenvalue: f64, residual: f64 },

    #[error("eps*mu is not constant: max relative deviation {max_deviation:e} at x = {x}")]
    NotConstantIndex { max_deviation: f64, x: f64 },

    #[error("spectra are not comparable: {0}")]
    ShiftMismatch(String),

    #[error("tabulated data line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_index(self, index: usize) -> Self {
        Error::AtGridPoint {
            index,
            source: Box::new(self),
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
