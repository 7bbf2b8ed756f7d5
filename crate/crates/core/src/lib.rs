//! Core pipeline for relating natural image patch statistics, algorithmic
//! complexity and subjective randomness judgments.
//!
//! - [`grid`]: PGM ingestion, median binarization, patch extraction, corpus
//!   frequency tables and the natural-randomness score.
//! - [`complexity`]: 2D Turing machines, the sampled coding-theorem estimator
//!   (CTM) and the block decomposition method (BDM).
//! - [`stats`]: Pearson correlation, OLS, the Sobel test and three-variable
//!   mediation, with in-tree distribution functions.
//! - [`stimuli`]: frequency-weighted stimulus sampling.

pub mod complexity;
pub mod grid;
pub mod pattern;
pub mod rng;
pub mod stats;
pub mod stimuli;

pub use pattern::{Pattern, PatternError};

/// Logarithm base used for the information scores.
///
/// Everything downstream of the scores (correlations, standardized paths,
/// Sobel z) is invariant to the choice; bits are the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Two,
    E,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::E => x.ln(),
        }
    }
}
