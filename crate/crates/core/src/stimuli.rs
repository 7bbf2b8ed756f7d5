//! Stimulus sets drawn from a corpus frequency table.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::FrequencyTable;
use crate::pattern::{Pattern, PatternError};
use crate::rng;

#[derive(Debug, Error, PartialEq)]
pub enum StimulusError {
    #[error("table has {available} distinct patterns, {requested} requested")]
    NotEnoughPatterns { requested: usize, available: usize },
    #[error("stimulus set {0:?} repeats a pattern")]
    Duplicate(String),
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

/// Ordered, duplicate-free list of patterns shown to participants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StimulusSetRepr", into = "StimulusSetRepr")]
pub struct StimulusSet {
    pub id: String,
    side: usize,
    patterns: Vec<Pattern>,
    pub corpus: String,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct StimulusSetRepr {
    id: String,
    k: usize,
    patterns: Vec<String>,
    corpus: String,
    seed: u64,
}

impl From<StimulusSet> for StimulusSetRepr {
    fn from(s: StimulusSet) -> Self {
        StimulusSetRepr {
            id: s.id,
            k: s.side,
            patterns: s.patterns.iter().map(|p| p.to_hex()).collect(),
            corpus: s.corpus,
            seed: s.seed,
        }
    }
}

impl TryFrom<StimulusSetRepr> for StimulusSet {
    type Error = StimulusError;

    fn try_from(r: StimulusSetRepr) -> Result<Self, Self::Error> {
        let patterns = r
            .patterns
            .iter()
            .map(|h| Pattern::from_hex(r.k, h))
            .collect::<Result<Vec<_>, _>>()?;
        StimulusSet::new(r.id, r.k, patterns, r.corpus, r.seed)
    }
}

impl StimulusSet {
    pub fn new(
        id: String,
        side: usize,
        patterns: Vec<Pattern>,
        corpus: String,
        seed: u64,
    ) -> Result<Self, StimulusError> {
        let mut seen = std::collections::HashSet::new();
        for p in &patterns {
            if p.side() != side {
                return Err(PatternError::BadSide(p.side()).into());
            }
            if !seen.insert(p.bits()) {
                return Err(StimulusError::Duplicate(id));
            }
        }
        Ok(StimulusSet {
            id,
            side,
            patterns,
            corpus,
            seed,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }
}

/// Draws `n` distinct patterns, each draw picking a remaining pattern with
/// probability proportional to its corpus count.
///
/// This has the same distribution as drawing occurrences without
/// replacement and skipping repeats: once a pattern is taken its remaining
/// occurrences can only produce duplicates.
pub fn sample_stimuli(
    table: &FrequencyTable,
    n: usize,
    seed: u64,
) -> Result<StimulusSet, StimulusError> {
    if table.distinct() < n {
        return Err(StimulusError::NotEnoughPatterns {
            requested: n,
            available: table.distinct(),
        });
    }
    let mut pool: Vec<(Pattern, u64)> = table.iter().collect();
    let mut remaining: u64 = pool.iter().map(|(_, c)| c).sum();
    let mut r = rng::seeded(seed);
    let mut chosen = Vec::with_capacity(n);
    for _ in 0..n {
        let mut u = rng::below(&mut r, remaining);
        let idx = pool
            .iter()
            .position(|&(_, c)| {
                if u < c {
                    true
                } else {
                    u -= c;
                    false
                }
            })
            .expect("u is below the remaining weight");
        let (p, c) = pool.remove(idx);
        remaining -= c;
        chosen.push(p);
    }
    StimulusSet::new(
        format!("k{}-n{}-seed{}", table.side(), n, seed),
        table.side(),
        chosen,
        String::new(),
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ExtractionMode;

    fn table(counts: &[(u64, u64)]) -> FrequencyTable {
        FrequencyTable::from_counts(4, ExtractionMode::Tiled, 1, counts.iter().copied()).unwrap()
    }

    #[test]
    fn exhausting_the_table() {
        let t = table(&[(1, 5), (2, 1), (3, 9)]);
        let s = sample_stimuli(&t, 3, 0).unwrap();
        let mut bits: Vec<u64> = s.patterns().iter().map(|p| p.bits()).collect();
        bits.sort();
        assert_eq!(bits, vec![1, 2, 3]);
    }

    #[test]
    fn deterministic_per_seed() {
        let t = table(&(0..200).map(|b| (b, b % 7 + 1)).collect::<Vec<_>>());
        assert_eq!(sample_stimuli(&t, 50, 9).unwrap(), sample_stimuli(&t, 50, 9).unwrap());
        assert_ne!(sample_stimuli(&t, 50, 9).unwrap(), sample_stimuli(&t, 50, 10).unwrap());
    }

    #[test]
    fn weighting_follows_counts() {
        let t = table(&[(0xaaaa, 999), (0x5555, 1)]);
        let hits = (0..10_000u64)
            .filter(|&s| sample_stimuli(&t, 1, s).unwrap().patterns()[0].bits() == 0xaaaa)
            .count();
        let frac = hits as f64 / 10_000.0;
        assert!((frac - 0.999).abs() < 0.01, "{frac}");
    }

    #[test]
    fn too_few_patterns() {
        let t = table(&[(1, 5)]);
        assert_eq!(
            sample_stimuli(&t, 2, 0),
            Err(StimulusError::NotEnoughPatterns {
                requested: 2,
                available: 1
            })
        );
    }

    #[test]
    fn json_uses_hex_patterns() {
        let t = table(&[(0xa5a5, 3), (0x0001, 1)]);
        let s = sample_stimuli(&t, 2, 4).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"k\":4"));
        assert!(json.contains("\"a5a5\""));
        let back: StimulusSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        let dup = r#"{"id":"x","k":2,"patterns":["1","1"],"corpus":"","seed":0}"#;
        assert!(serde_json::from_str::<StimulusSet>(dup).is_err());
    }
}
