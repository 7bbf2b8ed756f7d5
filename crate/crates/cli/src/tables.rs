//! Per-pattern score table written by `score` and read by `analyze`.

use std::fmt::Write as _;

use scenestat_core::{LogBase, Pattern};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRow {
    pub pattern: Pattern,
    pub complexity_bits: f64,
    pub natural_randomness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub side: usize,
    pub alpha: f64,
    pub block: usize,
    pub log_base: LogBase,
    pub rows: Vec<ScoreRow>,
}

fn base_name(b: LogBase) -> &'static str {
    match b {
        LogBase::Two => "two",
        LogBase::E => "e",
    }
}

impl ScoreTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# k={}", self.side).unwrap();
        writeln!(out, "# alpha={}", self.alpha).unwrap();
        writeln!(out, "# block={}", self.block).unwrap();
        writeln!(out, "# log_base={}", base_name(self.log_base)).unwrap();
        out.push_str("pattern_hex,complexity_bits,natural_randomness\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{}",
                r.pattern.to_hex(),
                r.complexity_bits,
                r.natural_randomness
            )
            .unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<ScoreTable, String> {
        let mut side = None;
        let mut alpha = f64::NAN;
        let mut block = 0;
        let mut log_base = LogBase::Two;
        let mut header = false;
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| format!("line {line_no}: {what}");
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((key, value)) = meta.trim().split_once('=') {
                    let value = value.trim();
                    match key.trim() {
                        "k" => side = Some(value.parse().map_err(|_| bad("bad k"))?),
                        "alpha" => alpha = value.parse().map_err(|_| bad("bad alpha"))?,
                        "block" => block = value.parse().map_err(|_| bad("bad block"))?,
                        "log_base" => {
                            log_base = match value {
                                "two" => LogBase::Two,
                                "e" => LogBase::E,
                                _ => return Err(bad("bad log_base")),
                            }
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if !header {
                if line != "pattern_hex,complexity_bits,natural_randomness" {
                    return Err(bad(&format!("unexpected header {line:?}")));
                }
                header = true;
                continue;
            }
            let side = side.ok_or_else(|| bad("missing `# k=` metadata"))?;
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(bad("expected 3 fields"));
            }
            let pattern = Pattern::from_hex(side, f[0]).map_err(|e| bad(&e.to_string()))?;
            let num = |s: &str| -> Result<f64, String> {
                let v: f64 = s.parse().map_err(|_| bad(&format!("bad number {s:?}")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(bad("non-finite value"))
                }
            };
            rows.push(ScoreRow {
                pattern,
                complexity_bits: num(f[1])?,
                natural_randomness: num(f[2])?,
            });
        }
        if !header {
            return Err("missing header line".into());
        }
        Ok(ScoreTable {
            side: side.unwrap_or(0),
            alpha,
            block,
            log_base,
            rows,
        })
    }
}
