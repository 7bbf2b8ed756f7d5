use serde::{Deserialize, Serialize};

use super::dist::student_t_two_sided_p;
use super::StatsError;

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn check_finite(v: &[f64], name: &str) -> Result<(), StatsError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite(name.to_string()))
    }
}

/// Sample Pearson correlation with its t statistic and two-sided p value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub t: f64,
    pub p: f64,
    pub n: usize,
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFewObservations { need: 3, got: n });
    }
    check_finite(x, "x")?;
    check_finite(y, "y")?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::ZeroVariance("x".into()));
    }
    if syy == 0.0 {
        return Err(StatsError::ZeroVariance("y".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let (t, p) = if r.abs() == 1.0 {
        (r.signum() * f64::INFINITY, 0.0)
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        (t, student_t_two_sided_p(t, df))
    };
    Ok(Correlation { r, t, p, n })
}

/// Z-scores using the `n - 1` standard deviation.
pub fn standardize(v: &[f64]) -> Result<Vec<f64>, StatsError> {
    if v.len() < 2 {
        return Err(StatsError::TooFewObservations {
            need: 2,
            got: v.len(),
        });
    }
    check_finite(v, "vector")?;
    let m = mean(v);
    let ss: f64 = v.iter().map(|x| (x - m).powi(2)).sum();
    if ss == 0.0 {
        return Err(StatsError::ZeroVariance("vector".into()));
    }
    let sd = (ss / (v.len() - 1) as f64).sqrt();
    Ok(v.iter().map(|x| (x - m) / sd).collect())
}
