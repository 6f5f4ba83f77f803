use thiserror::Error;

use crate::dynamics::Status;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("not a simplex point: {0}")]
    InvalidSimplex(String),

    #[error("invalid landscape: {0}")]
    InvalidLandscape(String),

    #[error("invalid configuration for `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("mean fitness {mean:e} is too close to zero to normalize by; use the unnormalized field")]
    NearZeroMeanFitness { mean: f64 },

    #[error("step left the simplex: coordinate {index} became {value:e}")]
    StateLeftSimplex { index: usize, value: f64 },

    #[error("momentum coefficient {beta} is singular (|1 - beta| < 1e-9)")]
    BetaSingularity { beta: f64 },

    #[error("state has zero mass at index {index} where the reference is positive (divergence is infinite)")]
    SupportViolation { index: usize },

    #[error("Jensen bound argument {value:e} is not positive")]
    NonpositiveArgument { value: f64 },

    #[error("run did not converge (status {status:?}{})", beta.map(|b| format!(", beta = {b}")).unwrap_or_default())]
    DidNotConverge { status: Status, beta: Option<f64> },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
