//! Algorithmic complexity of small binary arrays.

mod bdm;
mod ctm;
pub mod machine;

pub use bdm::{bdm, bdm_pattern, BdmParams};
pub use ctm::{sample_counts, sample_ctm, CtmCounts, CtmMeta, CtmParams, CtmTable, BATCH_SIZE};
pub use machine::{run_machine, Move, Next, RunOutcome, Transition, TuringMachine2D};

use thiserror::Error;

use crate::pattern::Pattern;

#[derive(Debug, Error, PartialEq)]
pub enum ComplexityError {
    #[error("no machine produced a qualifying output ({n_halting} halted)")]
    InsufficientSamples { n_halting: u64 },
    #[error("invalid sampler parameters: {0}")]
    BadParams(String),
    #[error("unsupported side {0}")]
    BadSide(usize),
    #[error("pattern side {pattern} does not match CTM table side {table}")]
    SideMismatch { table: usize, pattern: usize },
    #[error("{width}x{height} grid cannot be tiled by {block}x{block} blocks")]
    NotTileable {
        width: usize,
        height: usize,
        block: usize,
    },
    #[error("pattern {0} is not a dihedral class representative")]
    NonCanonical(Pattern),
    #[error("CTM table line {line}: {message}")]
    Parse { line: usize, message: String },
}
