//! The per-pattern judgment export, `pattern_hex,n_random,n_total`.

use std::fmt::Write as _;

use scenestat_core::stats::JudgmentAggregate;
use scenestat_core::Pattern;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("aggregates line {line}: {message}")]
pub struct AggregateParseError {
    pub line: usize,
    pub message: String,
}

/// Judgment tallies for one stimulus set, rows in set order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregateTable {
    pub set_id: String,
    pub side: usize,
    pub completed_sessions: u64,
    pub rows: Vec<JudgmentAggregate>,
}

pub const PRESENTATION: &str = "all self-paced";

impl AggregateTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# set_id={}", self.set_id).unwrap();
        writeln!(out, "# k={}", self.side).unwrap();
        writeln!(out, "# completed_sessions={}", self.completed_sessions).unwrap();
        writeln!(out, "# presentation={PRESENTATION}").unwrap();
        if self.completed_sessions == 0 {
            out.push_str("# warning=no completed sessions; every n_total is 0\n");
        }
        out.push_str("pattern_hex,n_random,n_total\n");
        for r in &self.rows {
            writeln!(out, "{},{},{}", r.pattern.to_hex(), r.n_random, r.n_total).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<AggregateTable, AggregateParseError> {
        let err = |line: usize, message: String| AggregateParseError { line, message };
        let mut set_id = String::new();
        let mut side = None;
        let mut completed = 0;
        let mut rows = Vec::new();
        let mut header_seen = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((key, value)) = meta.trim().split_once('=') {
                    match key.trim() {
                        "set_id" => set_id = value.trim().to_string(),
                        "k" => {
                            side = Some(value.trim().parse().map_err(|_| {
                                err(line_no, format!("bad k {value:?}"))
                            })?)
                        }
                        "completed_sessions" => {
                            completed = value.trim().parse().map_err(|_| {
                                err(line_no, format!("bad completed_sessions {value:?}"))
                            })?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if !header_seen {
                if line != "pattern_hex,n_random,n_total" {
                    return Err(err(line_no, format!("unexpected header {line:?}")));
                }
                header_seen = true;
                continue;
            }
            let side = side.ok_or_else(|| err(line_no, "missing `# k=` metadata".into()))?;
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(err(line_no, format!("expected 3 fields, got {}", fields.len())));
            }
            let pattern =
                Pattern::from_hex(side, fields[0]).map_err(|e| err(line_no, e.to_string()))?;
            let num = |s: &str| {
                s.parse::<u64>()
                    .map_err(|_| err(line_no, format!("bad count {s:?}")))
            };
            let (n_random, n_total) = (num(fields[1])?, num(fields[2])?);
            if n_random > n_total {
                return Err(err(line_no, "n_random exceeds n_total".into()));
            }
            rows.push(JudgmentAggregate {
                pattern,
                n_random,
                n_total,
            });
        }
        if !header_seen {
            return Err(err(0, "missing header".into()));
        }
        Ok(AggregateTable {
            set_id,
            side: side.unwrap_or(0),
            completed_sessions: completed,
            rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let p = |b| Pattern::new(4, b).unwrap();
        let t = AggregateTable {
            set_id: "s1".into(),
            side: 4,
            completed_sessions: 3,
            rows: vec![
                JudgmentAggregate { pattern: p(0xa5a5), n_random: 2, n_total: 3 },
                JudgmentAggregate { pattern: p(0x0001), n_random: 0, n_total: 3 },
            ],
        };
        let csv = t.to_csv();
        assert!(csv.contains("# presentation=all self-paced\n"));
        assert!(csv.ends_with("a5a5,2,3\n0001,0,3\n"));
        assert_eq!(AggregateTable::from_csv(&csv).unwrap(), t);
    }

    #[test]
    fn empty_export_is_flagged() {
        let t = AggregateTable {
            set_id: "s".into(),
            side: 2,
            completed_sessions: 0,
            rows: vec![JudgmentAggregate {
                pattern: Pattern::new(2, 3).unwrap(),
                n_random: 0,
                n_total: 0,
            }],
        };
        assert!(t.to_csv().contains("# warning="));
    }

    #[test]
    fn rejects_bad_rows() {
        let head = "# k=4\npattern_hex,n_random,n_total\n";
        assert!(AggregateTable::from_csv(&format!("{head}ffff,3,2\n")).is_err());
        assert!(AggregateTable::from_csv(&format!("{head}fffff,1,2\n")).is_err());
        assert!(AggregateTable::from_csv(&format!("{head}ffff,1\n")).is_err());
        assert!(AggregateTable::from_csv("pattern_hex,n_random,n_total\nffff,1,2\n").is_err());
        assert!(AggregateTable::from_csv("# k=4\n").is_err());
    }
}
