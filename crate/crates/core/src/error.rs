use thiserror::Error;

use crate::certificate::Certificate;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("reciprocal exponent {value} at coordinate {index} outside [0, 1]")]
    ExponentOutOfRange { index: usize, value: f64 },

    #[error("q out of range: {0} (must satisfy 1 <= q <= 2)")]
    QOutOfRange(f64),

    #[error("grid side k_{index} = {value} must be a positive integer")]
    BadGridSide { index: usize, value: u64 },

    #[error("tensor has {got} entries but shape requires {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("box side s_{index} = {value} outside [1, {bound}]")]
    BoxOutOfRange {
        index: usize,
        value: f64,
        bound: f64,
    },

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("singular linear system")]
    Singular,

    #[error("replacement vertex not found: some replacement is degenerate")]
    HypothesisViolated,

    #[error("enumeration cap of {cap} (tuple, I) pairs exceeded; {total} required")]
    CapExceeded {
        cap: u64,
        total: u64,
        partial: Vec<Certificate>,
    },

    #[error("coordinate {coordinate} has 1/theta within tolerance of 1/q: not in general position; perturb first")]
    NotGeneralPosition { coordinate: usize },

    #[error("failed to reach general position after {attempts} perturbation attempts")]
    PerturbationFailed { attempts: u32 },

    #[error("weights are not on the probability simplex: {0}")]
    SimplexViolation(String),

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
