use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not symmetric positive definite (pivot {pivot:e} at row {row})")]
    NotSpd { row: usize, pivot: f64 },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is singular")]
    Singular,
    #[error("overflow: intermediate norm exceeded 1e300")]
    Overflow,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("noise file {0} not found")]
    NoiseFileMissing(PathBuf),
    #[error("malformed csv file {path}: {reason}")]
    MalformedCsv { path: PathBuf, reason: String },
    #[error("partial simulation requires an observation matrix C")]
    RequiresObservationMatrix,

    #[error("regularizer must be positive, got {0}")]
    NonPositiveRegularizer(f64),
    #[error("history is not generated by the stated model at step {step} (mismatch {mismatch:e})")]
    ModelMismatch { step: usize, mismatch: f64 },
    #[error("insufficient history at step {0}")]
    InsufficientHistory(usize),

    #[error("pair (A, C) is not observable (rank {rank} < {dim})")]
    NotObservable { rank: usize, dim: usize },
    #[error("pair (A, Sigma_x^1/2) is not controllable (rank {rank} < {dim})")]
    NotControllable { rank: usize, dim: usize },
    #[error("iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("filter is not strictly stable (spectral radius estimate {0})")]
    UnstableFilter(f64),

    #[error("hull volume supports dimension <= 6, got {0}")]
    DimensionTooLarge(usize),
    #[error("divisor polynomial is not monic")]
    NonMonicDivisor,
    #[error("no small-coefficient multiple found after {candidates} candidates (best residue {best_residue:e})")]
    NotFound { candidates: usize, best_residue: f64 },

    #[error("mu rule needs structural constants (c1, c2, alpha)")]
    MissingConstants,
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
