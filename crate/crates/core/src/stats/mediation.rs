//! Three-variable mediation on standardized data with the Sobel test.
//!
//! Paths: `a` mediator on predictor, `b` outcome on mediator controlling
//! for the predictor, `c` outcome on predictor alone, `c'` outcome on
//! predictor controlling for the mediator. For OLS, `c = c' + a·b` exactly.

use serde::{Deserialize, Serialize};

use super::dist::normal_two_sided_p;
use super::{ols, standardize, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sobel {
    pub z: f64,
    pub p: f64,
}

/// Classic Sobel test of the indirect effect `a·b`:
/// `z = a·b / sqrt(b²·se_a² + a²·se_b²)`.
pub fn sobel(a: f64, se_a: f64, b: f64, se_b: f64) -> Result<Sobel, StatsError> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(StatsError::NonFinite("path coefficient".into()));
    }
    if a * b == 0.0 {
        return Ok(Sobel { z: 0.0, p: 1.0 });
    }
    if !(se_a.is_finite() && se_b.is_finite() && se_a > 0.0 && se_b > 0.0) {
        return Err(StatsError::NonPositiveStdErr);
    }
    let z = a * b / (b * b * se_a * se_a + a * a * se_b * se_b).sqrt();
    Ok(Sobel {
        z,
        p: normal_two_sided_p(z),
    })
}

/// Standardized path coefficients, their standard errors and p values, the
/// full-model fit, and the Sobel test. Serializes as one flat object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediationReport {
    pub n: usize,
    pub a: f64,
    pub se_a: f64,
    pub p_a: f64,
    pub b: f64,
    pub se_b: f64,
    pub p_b: f64,
    pub c: f64,
    pub se_c: f64,
    pub p_c: f64,
    pub c_prime: f64,
    pub se_c_prime: f64,
    pub p_c_prime: f64,
    pub indirect: f64,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub f_p_value: f64,
    pub sobel_z: f64,
    pub sobel_p: f64,
}

/// Runs the three regressions on z-scored inputs.
pub fn mediation(
    predictor: &[f64],
    mediator: &[f64],
    outcome: &[f64],
) -> Result<MediationReport, StatsError> {
    let n = predictor.len();
    for v in [mediator, outcome] {
        if v.len() != n {
            return Err(StatsError::LengthMismatch(n, v.len()));
        }
    }
    if n < 4 {
        return Err(StatsError::TooFewObservations { need: 4, got: n });
    }
    let named = |name: &str, v: &[f64]| {
        standardize(v).map_err(|e| match e {
            StatsError::ZeroVariance(_) => StatsError::ZeroVariance(name.to_string()),
            StatsError::NonFinite(_) => StatsError::NonFinite(name.to_string()),
            other => other,
        })
    };
    let x = named("predictor", predictor)?;
    let m = named("mediator", mediator)?;
    let y = named("outcome", outcome)?;

    let total = ols(&y, &[("predictor", &x)])?;
    let first = ols(&m, &[("predictor", &x)])?;
    let full = ols(&y, &[("predictor", &x), ("mediator", &m)])?;

    let (a, se_a) = (first.coefficients[1], first.std_errors[1]);
    let (b, se_b) = (full.coefficients[2], full.std_errors[2]);
    let s = sobel(a, se_a, b, se_b)?;
    Ok(MediationReport {
        n,
        a,
        se_a,
        p_a: first.p_values[1],
        b,
        se_b,
        p_b: full.p_values[2],
        c: total.coefficients[1],
        se_c: total.std_errors[1],
        p_c: total.p_values[1],
        c_prime: full.coefficients[1],
        se_c_prime: full.std_errors[1],
        p_c_prime: full.p_values[1],
        indirect: a * b,
        r_squared: full.r_squared,
        adj_r_squared: full.adj_r_squared,
        f_p_value: full.f_p_value,
        sobel_z: s.z,
        sobel_p: s.p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn null_path_gives_zero() {
        let s = sobel(0.0, 0.3, 0.7, 0.2).unwrap();
        assert_eq!((s.z, s.p), (0.0, 1.0));
        let s = sobel(0.0, 0.0, 0.7, 0.0).unwrap();
        assert_eq!((s.z, s.p), (0.0, 1.0));
    }

    #[test]
    fn textbook_example() {
        // 0.2 / sqrt(0.16 * 0.01 + 0.25 * 0.01)
        let s = sobel(0.5, 0.1, 0.4, 0.1).unwrap();
        let z = 0.2 / 0.0041f64.sqrt();
        assert!((s.z - z).abs() < 1e-12);
        assert!((s.z - 3.123_475_237_772_121).abs() < 1e-12);
        assert!((s.p - 0.001_787_4).abs() < 1e-6);
    }

    #[test]
    fn argument_symmetry_and_errors() {
        let s1 = sobel(0.3, 0.05, -0.8, 0.2).unwrap();
        let s2 = sobel(-0.8, 0.2, 0.3, 0.05).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(sobel(0.3, 0.0, 0.5, 0.1), Err(StatsError::NonPositiveStdErr));
        assert_eq!(sobel(0.3, 0.1, 0.5, -0.1), Err(StatsError::NonPositiveStdErr));
    }

    fn noise(r: &mut rng::Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng::normal(r)).collect()
    }

    #[test]
    fn full_mediation_is_detected() {
        let mut r = rng::seeded(31);
        let n = 500;
        let x = noise(&mut r, n);
        let m: Vec<f64> = x.iter().map(|v| 0.8 * v + rng::normal(&mut r)).collect();
        let y: Vec<f64> = m.iter().map(|v| 0.8 * v + rng::normal(&mut r)).collect();
        let rep = mediation(&x, &m, &y).unwrap();
        assert!(rep.c_prime.abs() < 0.1, "{rep:?}");
        assert!(rep.sobel_z > 1.96);
        assert!((rep.c - (rep.c_prime + rep.a * rep.b)).abs() < 1e-10);
    }

    #[test]
    fn direct_path_only() {
        let mut r = rng::seeded(32);
        let x = noise(&mut r, 100);
        let m = noise(&mut r, 100);
        let rep = mediation(&x, &m, &x).unwrap();
        assert!((rep.c - 1.0).abs() < 1e-12);
        assert!(rep.b.abs() < 1e-10);
    }

    #[test]
    fn report_is_flat_json() {
        let mut r = rng::seeded(33);
        let x = noise(&mut r, 30);
        let m: Vec<f64> = x.iter().map(|v| v + rng::normal(&mut r)).collect();
        let y: Vec<f64> = m.iter().map(|v| v + rng::normal(&mut r)).collect();
        let rep = mediation(&x, &m, &y).unwrap();
        let json = serde_json::to_value(rep).unwrap();
        let obj = json.as_object().unwrap();
        assert!(obj.values().all(|v| v.is_number()));
        for key in ["a", "se_a", "b", "se_b", "c", "c_prime", "sobel_z", "sobel_p", "n"] {
            assert!(obj.contains_key(key), "{key}");
        }
        let back: MediationReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, rep);
    }

    #[test]
    fn input_errors() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let flat = [1.0; 5];
        assert_eq!(
            mediation(&x, &flat, &x).unwrap_err(),
            StatsError::ZeroVariance("mediator".into())
        );
        assert!(matches!(
            mediation(&x, &[2.0, 4.0, 6.0, 8.0, 10.0], &[1.0, 3.0, 2.0, 5.0, 4.0]),
            Err(StatsError::Collinear { ref column }) if column == "mediator"
        ));
        assert!(mediation(&x[..3], &x[..3], &x[..3]).is_err());
    }
}
