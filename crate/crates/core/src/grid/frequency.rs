use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use super::{binarize_median, extract_patches, ExtractionMode, GrayImage};
use crate::pattern::Pattern;
use crate::LogBase;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("patch side {0} is not supported (expected 2, 3 or 4)")]
    UnsupportedSide(usize),
    #[error("pattern side {pattern} does not match table side {table}")]
    SideMismatch { table: usize, pattern: usize },
    #[error("pattern {0} was never observed; use alpha > 0 or exclude it")]
    Unobserved(Pattern),
    #[error("smoothing alpha must be finite and >= 0, got {0}")]
    BadAlpha(f64),
    #[error("cannot merge tables with different side or extraction mode")]
    IncompatibleMerge,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("frequency table line {line}: {message}")]
pub struct TableParseError {
    pub line: usize,
    pub message: String,
}

/// Occurrence counts of `k×k` patterns over a scanned corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    side: usize,
    mode: ExtractionMode,
    counts: BTreeMap<u64, u64>,
    total: u64,
    n_images: u64,
}

impl FrequencyTable {
    pub fn new(side: usize, mode: ExtractionMode) -> Result<Self, GridError> {
        if !(2..=4).contains(&side) {
            return Err(GridError::UnsupportedSide(side));
        }
        Ok(FrequencyTable {
            side,
            mode,
            counts: BTreeMap::new(),
            total: 0,
            n_images: 0,
        })
    }

    /// Builds a table from explicit `(pattern bits, count)` pairs; zero counts
    /// are dropped.
    pub fn from_counts(
        side: usize,
        mode: ExtractionMode,
        n_images: u64,
        counts: impl IntoIterator<Item = (u64, u64)>,
    ) -> Result<Self, GridError> {
        let mut t = FrequencyTable::new(side, mode)?;
        t.n_images = n_images;
        for (bits, n) in counts {
            let p = Pattern::new(side, bits).map_err(|_| GridError::UnsupportedSide(side))?;
            t.add(p, n);
        }
        Ok(t)
    }

    fn add(&mut self, p: Pattern, n: u64) {
        if n > 0 {
            *self.counts.entry(p.bits()).or_insert(0) += n;
            self.total += n;
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn mode(&self) -> ExtractionMode {
        self.mode
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn n_images(&self) -> u64 {
        self.n_images
    }

    /// Number of distinct patterns observed.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, p: &Pattern) -> u64 {
        self.counts.get(&p.bits()).copied().unwrap_or(0)
    }

    /// Observed patterns with their counts, ascending by packed value.
    pub fn iter(&self) -> impl Iterator<Item = (Pattern, u64)> + '_ {
        let side = self.side;
        self.counts
            .iter()
            .map(move |(&b, &n)| (Pattern::new(side, b).expect("validated on insert"), n))
    }

    /// Adds another table's counts and image tally into this one.
    pub fn merge(&mut self, other: &FrequencyTable) -> Result<(), GridError> {
        if self.side != other.side || self.mode != other.mode {
            return Err(GridError::IncompatibleMerge);
        }
        for (&b, &n) in &other.counts {
            *self.counts.entry(b).or_insert(0) += n;
        }
        self.total += other.total;
        self.n_images += other.n_images;
        Ok(())
    }

    /// CSV with a `#` metadata line, a `pattern_hex,count` header, and rows
    /// ascending by pattern value.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# side={} mode={} total={} n_images={}\npattern_hex,count\n",
            self.side, self.mode, self.total, self.n_images
        );
        for (p, n) in self.iter() {
            writeln!(out, "{},{}", p.to_hex(), n).expect("write to String");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, TableParseError> {
        let err = |line: usize, message: String| TableParseError { line, message };
        let mut meta: BTreeMap<String, String> = BTreeMap::new();
        let mut table: Option<FrequencyTable> = None;
        let mut seen_header = false;
        let mut last: Option<u64> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if seen_header {
                    return Err(err(line_no, "metadata after the column header".into()));
                }
                for kv in rest.split_whitespace() {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| err(line_no, format!("bad metadata token {kv:?}")))?;
                    meta.insert(k.to_string(), v.to_string());
                }
                continue;
            }
            if !seen_header {
                if line != "pattern_hex,count" {
                    return Err(err(line_no, format!("expected header, got {line:?}")));
                }
                seen_header = true;
                let get = |k: &str| {
                    meta.get(k)
                        .ok_or_else(|| err(line_no, format!("missing metadata {k}")))
                };
                let side: usize = get("side")?
                    .parse()
                    .map_err(|_| err(line_no, "bad side".into()))?;
                let mode: ExtractionMode = get("mode")?.parse().map_err(|e| err(line_no, e))?;
                let mut t = FrequencyTable::new(side, mode).map_err(|e| err(line_no, e.to_string()))?;
                t.n_images = get("n_images")?
                    .parse()
                    .map_err(|_| err(line_no, "bad n_images".into()))?;
                table = Some(t);
                continue;
            }
            let t = table.as_mut().expect("set with header");
            let (hex, count) = line
                .split_once(',')
                .ok_or_else(|| err(line_no, "expected two columns".into()))?;
            let p = Pattern::from_hex(t.side, hex).map_err(|e| err(line_no, e.to_string()))?;
            let n: u64 = count
                .trim()
                .parse()
                .map_err(|_| err(line_no, format!("bad count {count:?}")))?;
            if n == 0 {
                return Err(err(line_no, "zero count row".into()));
            }
            if last.is_some_and(|prev| prev >= p.bits()) {
                return Err(err(line_no, "rows must be strictly ascending".into()));
            }
            last = Some(p.bits());
            t.add(p, n);
        }
        let t = table.ok_or_else(|| err(0, "missing column header".into()))?;
        let declared: u64 = meta
            .get("total")
            .ok_or_else(|| err(0, "missing metadata total".into()))?
            .parse()
            .map_err(|_| err(0, "bad total".into()))?;
        if declared != t.total {
            return Err(err(
                0,
                format!("declared total {declared} but rows sum to {}", t.total),
            ));
        }
        Ok(t)
    }
}

/// Binarizes each image at its own median, extracts `k×k` patches and tallies
/// them. Images are processed in parallel; the result does not depend on the
/// schedule.
pub fn scan_corpus(
    images: &[GrayImage],
    k: usize,
    mode: ExtractionMode,
) -> Result<FrequencyTable, GridError> {
    let mut table = FrequencyTable::new(k, mode)?;
    let space = 1usize << (k * k);
    let dense = images
        .par_iter()
        .fold(
            || vec![0u64; space],
            |mut acc, img| {
                let grid = binarize_median(img);
                for p in extract_patches(&grid, k, mode).expect("side validated") {
                    acc[p.bits() as usize] += 1;
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; space],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    for (bits, n) in dense.into_iter().enumerate() {
        table.add(Pattern::new(k, bits as u64).expect("in range"), n);
    }
    table.n_images = images.len() as u64;
    Ok(table)
}

/// `P(x|r)`: probability of a `k×k` array when every cell is an independent
/// fair coin, `2^(-k²)`.
pub fn chance_probability(k: usize) -> f64 {
    (2.0f64).powi(-((k * k) as i32))
}

/// `log2(P(x|r) / P(x|n))` with add-`alpha` smoothing of the natural
/// frequency over all `2^(k²)` patterns.
///
/// Negative for patterns more common in the corpus than chance predicts.
pub fn natural_randomness(
    x: &Pattern,
    table: &FrequencyTable,
    alpha: f64,
) -> Result<f64, GridError> {
    natural_randomness_in(x, table, alpha, LogBase::Two)
}

pub fn natural_randomness_in(
    x: &Pattern,
    table: &FrequencyTable,
    alpha: f64,
    base: LogBase,
) -> Result<f64, GridError> {
    if x.side() != table.side() {
        return Err(GridError::SideMismatch {
            table: table.side(),
            pattern: x.side(),
        });
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(GridError::BadAlpha(alpha));
    }
    let count = table.count(x);
    if alpha == 0.0 && count == 0 {
        return Err(GridError::Unobserved(*x));
    }
    let space = Pattern::space_size(table.side());
    let p_natural = (count as f64 + alpha) / (table.total() as f64 + alpha * space);
    Ok(base.log(chance_probability(table.side()) / p_natural))
}
