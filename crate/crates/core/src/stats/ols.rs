//! Multiple least squares with an intercept, solved by Householder QR.

use serde::{Deserialize, Serialize};

use super::dist::{f_upper_p, student_t_two_sided_p};
use super::{mean, StatsError};

/// Relative size below which a column's remaining norm counts as zero.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    /// `"intercept"` followed by the predictor names.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    /// Overall F test of all slopes against zero.
    pub f_statistic: f64,
    pub f_p_value: f64,
    /// Residual variance `RSS / df`.
    pub sigma2: f64,
    pub residuals: Vec<f64>,
    pub n: usize,
    pub df: usize,
}

impl RegressionFit {
    /// Index of a named term (`"intercept"` is 0).
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Regresses `y` on an intercept plus the named predictors.
///
/// Coefficients come from a Householder QR factorization of the design
/// matrix; standard errors from `sigma2 * (XᵀX)⁻¹ = sigma2 * R⁻¹R⁻ᵀ`.
pub fn ols(y: &[f64], predictors: &[(&str, &[f64])]) -> Result<RegressionFit, StatsError> {
    let n = y.len();
    let p = predictors.len() + 1;
    for (_, col) in predictors {
        if col.len() != n {
            return Err(StatsError::LengthMismatch(n, col.len()));
        }
    }
    if n < p + 1 {
        return Err(StatsError::TooFewObservations { need: p + 1, got: n });
    }
    if !y.iter().all(|v| v.is_finite()) {
        return Err(StatsError::NonFinite("y".into()));
    }
    let mut names = vec!["intercept".to_string()];
    // column-major design matrix
    let mut cols: Vec<Vec<f64>> = vec![vec![1.0; n]];
    for (name, col) in predictors {
        if !col.iter().all(|v| v.is_finite()) {
            return Err(StatsError::NonFinite(name.to_string()));
        }
        names.push(name.to_string());
        cols.push(col.to_vec());
    }
    let design = cols.clone();
    let col_norms: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();

    let mut qty = y.to_vec();
    let mut r = vec![vec![0.0; p]; p];
    for j in 0..p {
        let norm = cols[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if col_norms[j] == 0.0 || norm <= RANK_TOL * col_norms[j] {
            return Err(StatsError::Collinear {
                column: names[j].clone(),
            });
        }
        let alpha = if cols[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = cols[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |target: &mut [f64]| {
            let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
            let scale = 2.0 * dot / vnorm2;
            for (t, vi) in target.iter_mut().zip(&v) {
                *t -= scale * vi;
            }
        };
        for col in cols.iter_mut().skip(j) {
            reflect(&mut col[j..]);
        }
        reflect(&mut qty[j..]);
        for (k, col) in cols.iter().enumerate().skip(j) {
            r[j][k] = col[j];
        }
    }

    // back substitution R b = Qᵀy
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|k| r[i][k] * beta[k]).sum();
        beta[i] = (qty[i] - s) / r[i][i];
    }

    let residuals: Vec<f64> = (0..n)
        .map(|i| y[i] - (0..p).map(|j| design[j][i] * beta[j]).sum::<f64>())
        .collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let my = mean(y);
    let tss: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if tss == 0.0 {
        return Err(StatsError::ZeroVariance("y".into()));
    }
    let df = n - p;
    let sigma2 = rss / df as f64;

    // R⁻¹ (upper triangular), column by column
    let mut rinv = vec![vec![0.0; p]; p];
    for c in 0..p {
        rinv[c][c] = 1.0 / r[c][c];
        for i in (0..c).rev() {
            let s: f64 = (i + 1..=c).map(|k| r[i][k] * rinv[k][c]).sum();
            rinv[i][c] = -s / r[i][i];
        }
    }
    let std_errors: Vec<f64> = (0..p)
        .map(|i| {
            let diag: f64 = (i..p).map(|k| rinv[i][k] * rinv[i][k]).sum();
            (sigma2 * diag).sqrt()
        })
        .collect();
    let t_stats: Vec<f64> = beta
        .iter()
        .zip(&std_errors)
        .map(|(b, se)| b / se)
        .collect();
    let p_values = t_stats
        .iter()
        .map(|&t| student_t_two_sided_p(t, df as f64))
        .collect();

    let r_squared = 1.0 - rss / tss;
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n - 1) as f64 / df as f64;
    let df_model = (p - 1) as f64;
    let f_statistic = (r_squared / df_model) / ((1.0 - r_squared) / df as f64);
    let f_p_value = f_upper_p(f_statistic, df_model, df as f64);

    Ok(RegressionFit {
        names,
        coefficients: beta,
        std_errors,
        t_stats,
        p_values,
        r_squared,
        adj_r_squared,
        f_statistic,
        f_p_value,
        sigma2,
        residuals,
        n,
        df,
    })
}
