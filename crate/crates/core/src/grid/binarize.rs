use super::GrayImage;
use crate::pattern::{Pattern, PatternError};

/// Binary raster, row-major, `1` = white.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitGrid {
    width: usize,
    height: usize,
    cells: Vec<u8>,
}

impl BitGrid {
    /// Returns `None` on a length mismatch or a cell outside `{0, 1}`.
    pub fn new(width: usize, height: usize, cells: Vec<u8>) -> Option<Self> {
        if cells.len() != width * height || cells.iter().any(|&c| c > 1) {
            return None;
        }
        Some(BitGrid {
            width,
            height,
            cells,
        })
    }

    pub fn from_pattern(p: &Pattern) -> Self {
        BitGrid {
            width: p.side(),
            height: p.side(),
            cells: p.cells(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.width + col]
    }

    /// The `side×side` window whose top-left cell is `(row, col)`.
    pub fn window(&self, row: usize, col: usize, side: usize) -> Result<Pattern, PatternError> {
        let mut bits = 0u64;
        for r in 0..side {
            let base = (row + r) * self.width + col;
            for (c, &v) in self.cells[base..base + side].iter().enumerate() {
                bits |= (v as u64) << (r * side + c);
            }
        }
        Pattern::new(side, bits)
    }
}

/// Lower median of the intensity multiset: element `(n-1)/2` of the sorted
/// values.
pub fn lower_median(values: &[u8]) -> u8 {
    assert!(!values.is_empty(), "median of an empty image");
    let mut hist = [0usize; 256];
    for &v in values {
        hist[v as usize] += 1;
    }
    let rank = (values.len() - 1) / 2;
    let mut seen = 0;
    for (v, &n) in hist.iter().enumerate() {
        seen += n;
        if seen > rank {
            return v as u8;
        }
    }
    unreachable!("rank is below the total count")
}

/// Thresholds an image at its own lower median: a pixel becomes white only
/// if it is strictly brighter than the median.
pub fn binarize_median(img: &GrayImage) -> BitGrid {
    let t = lower_median(img.pixels());
    BitGrid {
        width: img.width(),
        height: img.height(),
        cells: img.pixels().iter().map(|&v| (v > t) as u8).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn img(w: usize, h: usize, px: Vec<u8>) -> GrayImage {
        GrayImage::new(w, h, px).unwrap()
    }

    #[test]
    fn constant_image_is_all_black() {
        let g = binarize_median(&img(3, 3, vec![42; 9]));
        assert!(g.cells().iter().all(|&c| c == 0));
    }

    #[test]
    fn four_pixel_median() {
        // sorted: 10 20 30 40, lower median is the 2nd value
        let g = binarize_median(&img(2, 2, vec![10, 20, 30, 40]));
        assert_eq!(g.cells(), &[0, 0, 1, 1]);
        let g = binarize_median(&img(2, 2, vec![40, 10, 30, 20]));
        assert_eq!(g.cells(), &[1, 0, 1, 0]);
    }

    #[test]
    fn black_and_white_halves() {
        let px = vec![0, 255, 255, 0, 0, 255];
        let g = binarize_median(&img(3, 2, px.clone()));
        let expected: Vec<u8> = px.iter().map(|&v| (v == 255) as u8).collect();
        assert_eq!(g.cells(), expected.as_slice());
    }

    #[test]
    fn lower_median_odd_and_even() {
        assert_eq!(lower_median(&[5]), 5);
        assert_eq!(lower_median(&[9, 1, 5]), 5);
        assert_eq!(lower_median(&[9, 1, 5, 7]), 5);
    }

    proptest! {
        #[test]
        fn distinct_intensities_split_in_half(seed in any::<u64>(), half in 1usize..=128) {
            let mut values: Vec<u8> = (0..=255).collect();
            let mut r = rng::seeded(seed);
            rng::shuffle(&mut r, &mut values);
            values.truncate(2 * half);
            let g = binarize_median(&img(2 * half, 1, values));
            prop_assert_eq!(g.cells().iter().filter(|&&c| c == 1).count(), half);
        }
    }

    #[test]
    fn window_reads_row_major() {
        let g = BitGrid::new(3, 3, vec![1, 0, 0, 0, 1, 1, 0, 0, 1]).unwrap();
        assert_eq!(g.window(1, 1, 2).unwrap().cells(), vec![1, 1, 0, 1]);
        assert_eq!(g.window(0, 0, 3).unwrap().bits(), 0b100_110_001);
    }

    #[test]
    fn bitgrid_rejects_bad_input() {
        assert!(BitGrid::new(2, 2, vec![0, 1, 0]).is_none());
        assert!(BitGrid::new(1, 2, vec![0, 2]).is_none());
    }
}
