//! Coding-theorem estimates of small-pattern complexity from randomly drawn
//! 2D Turing machines.
//!
//! A machine "produces" a `k×k` pattern when it halts within the step budget
//! and the bounding box of the cells it wrote is exactly `k×k`. Outputs are
//! pooled by dihedral class. Every member of a class is equally likely to be
//! produced, so a pattern's frequency is its class's hits divided by the
//! class size, and its complexity is
//! `log2(total hits) - log2(class hits / class size)`. Classes never produced
//! get a ceiling one bit above the largest observed value.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::machine::{SquareRun, SquareRunner, TuringMachine2D};
use super::ComplexityError;
use crate::pattern::Pattern;
use crate::rng;

/// Machines drawn per random stream. Batch `i` uses ChaCha8 stream `i` of the
/// run seed, so results do not depend on how batches are scheduled.
pub const BATCH_SIZE: u64 = 1 << 14;

/// Sampler settings. Together with the seed these fully determine a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CtmParams {
    pub side: usize,
    pub n_states: usize,
    pub n_samples: u64,
    pub max_steps: u64,
    pub seed: u64,
}

impl Default for CtmParams {
    fn default() -> Self {
        CtmParams {
            side: 2,
            n_states: 4,
            n_samples: 1_000_000,
            max_steps: 200,
            seed: 1,
        }
    }
}

/// Provenance of a sampled table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtmMeta {
    pub n_states: usize,
    pub n_samples: u64,
    pub max_steps: u64,
    pub seed: u64,
    /// Machines that halted within the budget, any output shape.
    pub n_halting: u64,
    /// Machines whose output was exactly `side×side`.
    pub n_hits: u64,
    /// Value returned for classes that were never produced.
    pub ceiling: f64,
}

/// Complexity in bits per dihedral class of `side×side` patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct CtmTable {
    side: usize,
    entries: BTreeMap<u64, f64>,
    meta: CtmMeta,
}

/// Rounds to 12 significant digits, the precision of the CSV encoding, so a
/// saved table reloads to identical values.
fn round_sig12(v: f64) -> f64 {
    fmt_sig12(v).parse().expect("formatted float parses")
}

fn fmt_sig12(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

impl CtmTable {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn meta(&self) -> &CtmMeta {
        &self.meta
    }

    /// Observed classes keyed by canonical representative.
    pub fn entries(&self) -> impl Iterator<Item = (Pattern, f64)> + '_ {
        self.entries
            .iter()
            .map(|(&b, &v)| (Pattern::new(self.side, b).expect("validated"), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// CTM of any pattern of the table's side; unobserved classes get the
    /// ceiling.
    pub fn get(&self, p: &Pattern) -> Result<f64, ComplexityError> {
        if p.side() != self.side {
            return Err(ComplexityError::SideMismatch {
                table: self.side,
                pattern: p.side(),
            });
        }
        Ok(self.lookup(p))
    }

    pub(crate) fn lookup(&self, p: &Pattern) -> f64 {
        self.entries
            .get(&p.canonical().bits())
            .copied()
            .unwrap_or(self.meta.ceiling)
    }

    /// Minimum over observed classes.
    pub fn min_entry(&self) -> Option<(Pattern, f64)> {
        self.entries()
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
    }

    /// Builds a table from per-class hit counts. Keys must be canonical; each
    /// class's hits are shared evenly among its members.
    pub fn from_frequencies(
        side: usize,
        freqs: &BTreeMap<u64, u64>,
        meta: CtmMeta,
    ) -> Result<CtmTable, ComplexityError> {
        let n_hits: u64 = freqs.values().sum();
        if n_hits == 0 {
            return Err(ComplexityError::InsufficientSamples {
                n_halting: meta.n_halting,
            });
        }
        let log_total = (n_hits as f64).log2();
        let mut entries = BTreeMap::new();
        for (&bits, &n) in freqs {
            let p = Pattern::new(side, bits).map_err(|_| ComplexityError::BadSide(side))?;
            if !p.is_canonical() {
                return Err(ComplexityError::NonCanonical(p));
            }
            if n > 0 {
                let per_member = (n as f64).log2() - (p.orbit_size() as f64).log2();
                entries.insert(bits, round_sig12(log_total - per_member));
            }
        }
        let max = entries.values().copied().fold(0.0, f64::max);
        Ok(CtmTable {
            side,
            entries,
            meta: CtmMeta {
                n_hits,
                ceiling: round_sig12(max + 1.0),
                ..meta
            },
        })
    }

    /// CSV with `#`-prefixed metadata lines and a `pattern_hex,ctm_bits`
    /// header; values carry 12 significant digits.
    pub fn to_csv(&self) -> String {
        let m = &self.meta;
        let mut out = String::new();
        writeln!(out, "# side={}", self.side).unwrap();
        writeln!(out, "# n_states={}", m.n_states).unwrap();
        writeln!(out, "# n_samples={}", m.n_samples).unwrap();
        writeln!(out, "# max_steps={}", m.max_steps).unwrap();
        writeln!(out, "# seed={}", m.seed).unwrap();
        writeln!(out, "# n_halting={}", m.n_halting).unwrap();
        writeln!(out, "# n_hits={}", m.n_hits).unwrap();
        writeln!(out, "# ceiling={}", fmt_sig12(m.ceiling)).unwrap();
        out.push_str("pattern_hex,ctm_bits\n");
        for (p, v) in self.entries() {
            writeln!(out, "{},{}", p.to_hex(), fmt_sig12(v)).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<CtmTable, ComplexityError> {
        let err = |line: usize, message: String| ComplexityError::Parse { line, message };
        let mut meta: BTreeMap<String, String> = BTreeMap::new();
        let mut side: Option<usize> = None;
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if side.is_some() {
                    return Err(err(line_no, "metadata after the column header".into()));
                }
                let (k, v) = rest
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| err(line_no, format!("bad metadata line {line:?}")))?;
                meta.insert(k.trim().to_string(), v.trim().to_string());
                continue;
            }
            let Some(k) = side else {
                if line != "pattern_hex,ctm_bits" {
                    return Err(err(line_no, format!("expected header, got {line:?}")));
                }
                let s: usize = meta
                    .get("side")
                    .ok_or_else(|| err(line_no, "missing metadata side".into()))?
                    .parse()
                    .map_err(|_| err(line_no, "bad side".into()))?;
                if !(2..=4).contains(&s) {
                    return Err(ComplexityError::BadSide(s));
                }
                side = Some(s);
                continue;
            };
            let (hex, value) = line
                .split_once(',')
                .ok_or_else(|| err(line_no, "expected two columns".into()))?;
            let p = Pattern::from_hex(k, hex).map_err(|e| err(line_no, e.to_string()))?;
            if !p.is_canonical() {
                return Err(err(line_no, format!("pattern {p} is not canonical")));
            }
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| err(line_no, format!("bad value {value:?}")))?;
            if !v.is_finite() || v < 0.0 {
                return Err(err(line_no, format!("value {v} must be finite and >= 0")));
            }
            if entries.insert(p.bits(), v).is_some() {
                return Err(err(line_no, format!("duplicate pattern {p}")));
            }
        }
        let side = side.ok_or_else(|| err(0, "missing column header".into()))?;
        fn field<T: std::str::FromStr>(
            meta: &BTreeMap<String, String>,
            key: &str,
        ) -> Result<T, ComplexityError> {
            meta.get(key)
                .ok_or_else(|| ComplexityError::Parse {
                    line: 0,
                    message: format!("missing metadata {key}"),
                })?
                .parse()
                .map_err(|_| ComplexityError::Parse {
                    line: 0,
                    message: format!("bad metadata {key}"),
                })
        }
        let ceiling: f64 = field(&meta, "ceiling")?;
        if !ceiling.is_finite() || ceiling < 0.0 {
            return Err(err(0, format!("ceiling {ceiling} must be finite and >= 0")));
        }
        Ok(CtmTable {
            side,
            entries,
            meta: CtmMeta {
                n_states: field(&meta, "n_states")?,
                n_samples: field(&meta, "n_samples")?,
                max_steps: field(&meta, "max_steps")?,
                seed: field(&meta, "seed")?,
                n_halting: field(&meta, "n_halting")?,
                n_hits: field(&meta, "n_hits")?,
                ceiling,
            },
        })
    }
}

/// Per-class hit counts from one sampling run.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct CtmCounts {
    pub n_halting: u64,
    pub freqs: BTreeMap<u64, u64>,
}

impl CtmCounts {
    fn merge(mut self, other: CtmCounts) -> CtmCounts {
        self.n_halting += other.n_halting;
        for (b, n) in other.freqs {
            *self.freqs.entry(b).or_insert(0) += n;
        }
        self
    }
}

fn validate(params: &CtmParams) -> Result<(), ComplexityError> {
    if !(2..=3).contains(&params.side) {
        return Err(ComplexityError::BadSide(params.side));
    }
    if params.n_samples == 0 {
        return Err(ComplexityError::BadParams("n_samples must be >= 1".into()));
    }
    if params.max_steps == 0 {
        return Err(ComplexityError::BadParams("max_steps must be >= 1".into()));
    }
    if params.n_states == 0 || params.n_states > u8::MAX as usize {
        return Err(ComplexityError::BadParams(format!(
            "n_states must be in 1..=255, got {}",
            params.n_states
        )));
    }
    Ok(())
}

/// Draws `n_samples` machines and tallies canonical `k×k` outputs.
pub fn sample_counts(params: &CtmParams) -> Result<CtmCounts, ComplexityError> {
    validate(params)?;
    let n_batches = params.n_samples.div_ceil(BATCH_SIZE);
    let counts = (0..n_batches)
        .into_par_iter()
        .map(|batch| {
            let mut r = rng::seeded_stream(params.seed, batch);
            let mut runner = SquareRunner::new(params.side, params.max_steps);
            let start = batch * BATCH_SIZE;
            let len = BATCH_SIZE.min(params.n_samples - start);
            let mut local = CtmCounts::default();
            for _ in 0..len {
                let m = TuringMachine2D::random(params.n_states, &mut r);
                match runner.run(&m) {
                    SquareRun::Square(bits) => {
                        local.n_halting += 1;
                        let canon = Pattern::new(params.side, bits)
                            .expect("runner output fits")
                            .canonical();
                        *local.freqs.entry(canon.bits()).or_insert(0) += 1;
                    }
                    SquareRun::OtherShape => local.n_halting += 1,
                    SquareRun::Running => {}
                }
            }
            local
        })
        .reduce(CtmCounts::default, CtmCounts::merge);
    Ok(counts)
}

/// Samples machines and converts the tallies into a [`CtmTable`].
pub fn sample_ctm(params: &CtmParams) -> Result<CtmTable, ComplexityError> {
    let counts = sample_counts(params)?;
    CtmTable::from_frequencies(
        params.side,
        &counts.freqs,
        CtmMeta {
            n_states: params.n_states,
            n_samples: params.n_samples,
            max_steps: params.max_steps,
            seed: params.seed,
            n_halting: counts.n_halting,
            n_hits: 0,
            ceiling: 0.0,
        },
    )
}
