//! Block decomposition: complexity of a larger array from the CTM of its
//! blocks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ComplexityError, CtmTable};
use crate::grid::{window_offsets, BitGrid, ExtractionMode};
use crate::pattern::Pattern;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BdmParams {
    /// Side of the square blocks; must match the CTM table.
    pub block: usize,
}

impl Default for BdmParams {
    fn default() -> Self {
        BdmParams { block: 2 }
    }
}

/// Tiles `grid` into `b×b` blocks and sums, over each distinct block `u`,
/// `CTM(u) + log2(multiplicity(u))`.
///
/// Blocks are grouped by exact content; the table lookup then resolves each
/// to its dihedral class.
pub fn bdm(grid: &BitGrid, table: &CtmTable, params: BdmParams) -> Result<f64, ComplexityError> {
    let b = params.block;
    if !(2..=4).contains(&b) {
        return Err(ComplexityError::BadSide(b));
    }
    if table.side() != b {
        return Err(ComplexityError::SideMismatch {
            table: table.side(),
            pattern: b,
        });
    }
    if !grid.width().is_multiple_of(b)
        || !grid.height().is_multiple_of(b)
        || grid.width() == 0
        || grid.height() == 0
    {
        return Err(ComplexityError::NotTileable {
            width: grid.width(),
            height: grid.height(),
            block: b,
        });
    }
    let mut multiplicity: BTreeMap<u64, u64> = BTreeMap::new();
    for (r, c) in window_offsets(grid.width(), grid.height(), b, ExtractionMode::Tiled) {
        let block = grid.window(r, c, b).expect("block side validated");
        *multiplicity.entry(block.bits()).or_insert(0) += 1;
    }
    // BTreeMap order fixes the summation order, so any rearrangement of the
    // same blocks sums identically.
    Ok(multiplicity
        .iter()
        .map(|(&bits, &n)| {
            let block = Pattern::new(b, bits).expect("window fits");
            table.lookup(&block) + (n as f64).log2()
        })
        .sum())
}

/// [`bdm`] of a square pattern.
pub fn bdm_pattern(
    p: &Pattern,
    table: &CtmTable,
    params: BdmParams,
) -> Result<f64, ComplexityError> {
    bdm(&BitGrid::from_pattern(p), table, params)
}
