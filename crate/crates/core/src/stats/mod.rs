//! Correlation, regression and mediation statistics.

mod describe;
pub mod dist;
mod mediation;
mod ols;
mod subjective;

pub use describe::{mean, pearson, standardize, Correlation};
pub use mediation::{mediation, sobel, MediationReport, Sobel};
pub use ols::{ols, RegressionFit};
pub use subjective::{subjective_randomness, subjective_randomness_in, JudgmentAggregate};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {need} observations, got {got}")]
    TooFewObservations { need: usize, got: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("{0} has zero variance")]
    ZeroVariance(String),
    #[error("{0} contains a non-finite value")]
    NonFinite(String),
    #[error("design matrix is rank deficient at column {column:?}")]
    Collinear { column: String },
    #[error("standard errors must be positive and finite")]
    NonPositiveStdErr,
    #[error("pattern {0} has no judgments")]
    EmptyAggregate(String),
    #[error("aggregate has {n_random} random judgments out of {n_total}")]
    InvalidAggregate { n_random: u64, n_total: u64 },
}
