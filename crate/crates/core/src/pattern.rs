//! Square binary patterns packed into an integer.
//!
//! Cell `(row, col)` of a `k×k` pattern lives at bit `row * k + col`; a set
//! bit is a white cell.

use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

/// Largest side whose cells fit in the `u64` backing store.
pub const MAX_SIDE: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PatternError {
    #[error("pattern side {0} is outside 1..={MAX_SIDE}")]
    BadSide(usize),
    #[error("bits {bits:#x} do not fit a {side}x{side} pattern")]
    Overflow { side: usize, bits: u64 },
    #[error("expected {expected} cells, got {got}")]
    CellCount { expected: usize, got: usize },
    #[error("cell value {0} is not 0 or 1")]
    NonBinary(u8),
    #[error("invalid pattern hex {0:?}")]
    BadHex(String),
}

/// A `k×k` binary array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    side: u8,
    bits: u64,
}

fn mask(side: usize) -> u64 {
    let n = side * side;
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn check_side(side: usize) -> Result<(), PatternError> {
    if side == 0 || side > MAX_SIDE {
        Err(PatternError::BadSide(side))
    } else {
        Ok(())
    }
}

impl Pattern {
    pub fn new(side: usize, bits: u64) -> Result<Self, PatternError> {
        check_side(side)?;
        if bits & !mask(side) != 0 {
            return Err(PatternError::Overflow { side, bits });
        }
        Ok(Pattern {
            side: side as u8,
            bits,
        })
    }

    /// Packs a row-major cell array.
    pub fn from_cells(side: usize, cells: &[u8]) -> Result<Self, PatternError> {
        check_side(side)?;
        if cells.len() != side * side {
            return Err(PatternError::CellCount {
                expected: side * side,
                got: cells.len(),
            });
        }
        let mut bits = 0u64;
        for (i, &c) in cells.iter().enumerate() {
            match c {
                0 => {}
                1 => bits |= 1 << i,
                other => return Err(PatternError::NonBinary(other)),
            }
        }
        Ok(Pattern {
            side: side as u8,
            bits,
        })
    }

    pub fn side(&self) -> usize {
        self.side as usize
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Number of distinct patterns of this side, `2^(k²)`.
    pub fn space_size(side: usize) -> f64 {
        (2.0f64).powi((side * side) as i32)
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        ((self.bits >> (row * self.side() + col)) & 1) as u8
    }

    pub fn cells(&self) -> Vec<u8> {
        (0..self.side() * self.side())
            .map(|i| ((self.bits >> i) & 1) as u8)
            .collect()
    }

    pub fn count_ones(&self) -> u32 {
        self.bits.count_ones()
    }

    /// Zero-padded lowercase hex, `ceil(k²/4)` digits, no prefix.
    pub fn to_hex(&self) -> String {
        let width = (self.side() * self.side()).div_ceil(4);
        format!("{:0width$x}", self.bits, width = width)
    }

    /// Parses hex with or without a `0x` prefix, either case.
    pub fn from_hex(side: usize, s: &str) -> Result<Self, PatternError> {
        let t = s.trim();
        let digits = t
            .strip_prefix("0x")
            .or_else(|| t.strip_prefix("0X"))
            .unwrap_or(t);
        if digits.is_empty() {
            return Err(PatternError::BadHex(s.to_string()));
        }
        let bits =
            u64::from_str_radix(digits, 16).map_err(|_| PatternError::BadHex(s.to_string()))?;
        Pattern::new(side, bits)
    }

    fn remap(&self, src: impl Fn(usize, usize) -> (usize, usize)) -> Pattern {
        let k = self.side();
        let mut bits = 0u64;
        for r in 0..k {
            for c in 0..k {
                let (sr, sc) = src(r, c);
                bits |= (self.get(sr, sc) as u64) << (r * k + c);
            }
        }
        Pattern {
            side: self.side,
            bits,
        }
    }

    /// Quarter turn clockwise.
    pub fn rotate90(&self) -> Pattern {
        let k = self.side();
        self.remap(|r, c| (k - 1 - c, r))
    }

    /// Mirror across the vertical axis.
    pub fn flip_horizontal(&self) -> Pattern {
        let k = self.side();
        self.remap(|r, c| (r, k - 1 - c))
    }

    /// The 8 images of this pattern under the dihedral group of the square:
    /// four rotations followed by the four rotations of the mirror image.
    pub fn dihedral_images(&self) -> [Pattern; 8] {
        let mut out = [*self; 8];
        let mut p = *self;
        for slot in out.iter_mut().take(4) {
            *slot = p;
            p = p.rotate90();
        }
        let mut m = self.flip_horizontal();
        for slot in out.iter_mut().skip(4) {
            *slot = m;
            m = m.rotate90();
        }
        out
    }

    /// Class representative: the smallest packed value among the 8 images.
    pub fn canonical(&self) -> Pattern {
        let k = self.side();
        if let Some(table) = canonical_table(k) {
            return Pattern {
                side: self.side,
                bits: table[self.bits as usize] as u64,
            };
        }
        self.canonical_slow()
    }

    fn canonical_slow(&self) -> Pattern {
        *self.dihedral_images().iter().min().expect("eight images")
    }

    /// Number of distinct patterns in this pattern's dihedral class: 1, 2, 4
    /// or 8.
    pub fn orbit_size(&self) -> usize {
        let mut images = self.dihedral_images();
        images.sort();
        1 + images.windows(2).filter(|w| w[0] != w[1]).count()
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical() == *self
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Precomputed canonical representatives for sides 1..=4.
fn canonical_table(side: usize) -> Option<&'static [u16]> {
    static TABLES: [OnceLock<Vec<u16>>; 4] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    if !(1..=4).contains(&side) {
        return None;
    }
    let table = TABLES[side - 1].get_or_init(|| {
        let n = 1usize << (side * side);
        (0..n)
            .map(|bits| {
                let p = Pattern {
                    side: side as u8,
                    bits: bits as u64,
                };
                p.canonical_slow().bits as u16
            })
            .collect()
    });
    Some(table.as_slice())
}

/// All canonical representatives of a given side in ascending order.
pub fn canonical_classes(side: usize) -> Vec<Pattern> {
    assert!(side <= 4, "class enumeration is only offered for side <= 4");
    let n = 1u64 << (side * side);
    (0..n)
        .map(|b| Pattern {
            side: side as u8,
            bits: b,
        })
        .filter(|p| p.is_canonical())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cell_round_trip_is_exhaustive_for_side_two() {
        for bits in 0..16u64 {
            let p = Pattern::new(2, bits).unwrap();
            assert_eq!(Pattern::from_cells(2, &p.cells()).unwrap(), p);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn cell_round_trip_side_four(bits in 0u64..65536) {
            let p = Pattern::new(4, bits).unwrap();
            prop_assert_eq!(Pattern::from_cells(4, &p.cells()).unwrap(), p);
        }
    }

    #[test]
    fn checkerboard_encoding() {
        let p = Pattern::from_hex(4, "0xA5A5").unwrap();
        let expected: Vec<u8> = (0..16).map(|i| (((i / 4) + (i % 4) + 1) % 2) as u8).collect();
        assert_eq!(p.cells(), expected);
        assert_eq!(p.to_hex(), "a5a5");
    }

    #[test]
    fn hex_widths() {
        assert_eq!(Pattern::new(2, 0xa).unwrap().to_hex(), "a");
        assert_eq!(Pattern::new(3, 0x1ff).unwrap().to_hex(), "1ff");
        assert_eq!(Pattern::new(4, 1).unwrap().to_hex(), "0001");
        assert!(Pattern::from_hex(2, "10").is_err());
        assert!(Pattern::from_hex(2, "").is_err());
        assert!(Pattern::from_hex(2, "zz").is_err());
    }

    #[test]
    fn overflow_and_bad_cells_are_rejected() {
        assert!(matches!(
            Pattern::new(2, 16),
            Err(PatternError::Overflow { .. })
        ));
        assert!(matches!(Pattern::new(9, 0), Err(PatternError::BadSide(9))));
        assert!(matches!(
            Pattern::from_cells(2, &[0, 1, 2, 0]),
            Err(PatternError::NonBinary(2))
        ));
    }

    #[test]
    fn rotation_has_order_four() {
        for bits in 0..512u64 {
            let p = Pattern::new(3, bits).unwrap();
            assert_eq!(p.rotate90().rotate90().rotate90().rotate90(), p);
            assert_eq!(p.flip_horizontal().flip_horizontal(), p);
        }
    }

    #[test]
    fn single_corner_rotates_around_the_square() {
        // (0,0) -> (0,1) -> (1,1) -> (1,0) under clockwise rotation.
        let p = Pattern::from_cells(2, &[1, 0, 0, 0]).unwrap();
        assert_eq!(p.rotate90().cells(), vec![0, 1, 0, 0]);
        assert_eq!(p.rotate90().rotate90().cells(), vec![0, 0, 0, 1]);
    }

    #[test]
    fn two_by_two_has_six_classes() {
        // Burnside: (16 + 2*2 + 4 + 2*4 + 2*8) / 8 = 6.
        let classes = canonical_classes(2);
        assert_eq!(classes.len(), 6);
        let hex: Vec<String> = classes.iter().map(|p| p.to_hex()).collect();
        assert_eq!(hex, ["0", "1", "3", "6", "7", "f"]);
    }

    #[test]
    fn three_by_three_class_count_matches_burnside() {
        // Burnside: (2^9 + 2*2^3 + 2^5 + 4*2^6) / 8 = 102.
        assert_eq!(canonical_classes(3).len(), 102);
    }

    #[test]
    fn orbits_partition_the_space() {
        for k in 2..=4 {
            let total: usize = canonical_classes(k).iter().map(|p| p.orbit_size()).sum();
            assert_eq!(total, 1 << (k * k));
        }
        let sizes: Vec<usize> = canonical_classes(2).iter().map(|p| p.orbit_size()).collect();
        assert_eq!(sizes, [1, 4, 4, 2, 4, 1]);
    }

    #[test]
    fn canonical_is_class_invariant() {
        for bits in 0..(1u64 << 9) {
            let p = Pattern::new(3, bits).unwrap();
            let c = p.canonical();
            for img in p.dihedral_images() {
                assert_eq!(img.canonical(), c);
            }
            assert!(c <= p);
        }
    }
}
