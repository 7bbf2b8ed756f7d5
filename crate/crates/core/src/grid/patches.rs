use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::BitGrid;
use crate::pattern::{Pattern, PatternError, MAX_SIDE};

/// How windows are laid over a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractionMode {
    /// Non-overlapping windows at multiples of the side; partial edges dropped.
    #[default]
    Tiled,
    /// Every stride-1 window.
    Sliding,
}

impl fmt::Display for ExtractionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExtractionMode::Tiled => "tiled",
            ExtractionMode::Sliding => "sliding",
        })
    }
}

impl FromStr for ExtractionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tiled" => Ok(ExtractionMode::Tiled),
            "sliding" => Ok(ExtractionMode::Sliding),
            other => Err(format!("unknown extraction mode {other:?}")),
        }
    }
}

/// Number of windows of side `k` in a `width×height` grid.
pub fn window_count(width: usize, height: usize, k: usize, mode: ExtractionMode) -> usize {
    if k == 0 || k > width || k > height {
        return 0;
    }
    match mode {
        ExtractionMode::Tiled => (width / k) * (height / k),
        ExtractionMode::Sliding => (width - k + 1) * (height - k + 1),
    }
}

/// Top-left `(row, col)` of every window, in row-major window order.
pub fn window_offsets(
    width: usize,
    height: usize,
    k: usize,
    mode: ExtractionMode,
) -> impl Iterator<Item = (usize, usize)> {
    let (rows, cols, stride) = if k == 0 || k > width || k > height {
        (0, 0, 1)
    } else {
        match mode {
            ExtractionMode::Tiled => (height / k, width / k, k),
            ExtractionMode::Sliding => (height - k + 1, width - k + 1, 1),
        }
    };
    (0..rows).flat_map(move |r| (0..cols).map(move |c| (r * stride, c * stride)))
}

/// All `k×k` windows of `grid` as packed patterns.
///
/// Grids smaller than one window yield nothing. `k` must fit a [`Pattern`].
pub fn extract_patches(
    grid: &BitGrid,
    k: usize,
    mode: ExtractionMode,
) -> Result<Vec<Pattern>, PatternError> {
    if k == 0 || k > MAX_SIDE {
        return Err(PatternError::BadSide(k));
    }
    window_offsets(grid.width(), grid.height(), k, mode)
        .map(|(r, c)| grid.window(r, c, k))
        .collect()
}
