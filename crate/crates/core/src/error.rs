use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("prox weight must be nonnegative, got {0}")]
    NegativeProxWeight(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "backtracking exhausted at iteration {iteration}: {attempts} doublings, last trial L = {last_lhat:e} \
         (wrong oracle or nonconvex input?)"
    )]
    BacktrackingExhausted {
        iteration: usize,
        attempts: usize,
        last_lhat: f64,
    },

    #[error("accumulated weight A overflowed at iteration {0}")]
    WeightOverflow(usize),

    #[error("need at least 2 distinct samples, got {0}")]
    InsufficientSamples(usize),

    #[error("root finding failed at n = {n}: {reason}")]
    RootFinding { n: usize, reason: String },

    #[error("fit window must contain at least 2 points, got {0}")]
    WindowTooShort(usize),

    #[error("invariant violated at iteration {iteration}: {detail}")]
    InvariantViolation { iteration: usize, detail: String },

    #[error("reference cache {path}: {reason}")]
    CacheFormat { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
