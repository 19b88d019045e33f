//! Coefficient covariance, t-ratios, p-values, and significance stars.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::SeType;

/// Covariance of β̂ for the chosen estimator. `design` is the matrix whose
/// cross-product forms the bread — X for OLS, the projected X̂ for 2SLS —
/// and `residuals` are always the structural residuals y − Xβ̂.
pub fn covariance(
    design: &DMatrix<f64>,
    xtx_inv: &DMatrix<f64>,
    residuals: &DVector<f64>,
    clusters: Option<&[usize]>,
    se_type: SeType,
    df_resid: usize,
) -> DMatrix<f64> {
    let n = design.nrows();
    let k = design.ncols();
    let df = df_resid.max(1) as f64;
    match se_type {
        SeType::Classical => {
            let sigma2 = residuals.dot(residuals) / df;
            xtx_inv * sigma2
        }
        SeType::Robust => {
            // HC1: sandwich with small-sample scale n/df.
            let mut meat = DMatrix::zeros(k, k);
            for i in 0..n {
                let xi = design.row(i);
                let w = residuals[i] * residuals[i];
                for a in 0..k {
                    for b in 0..k {
                        meat[(a, b)] += w * xi[a] * xi[b];
                    }
                }
            }
            let sandwich = xtx_inv * meat * xtx_inv;
            sandwich * (n as f64 / df)
        }
        SeType::ClusterByCounty => {
            let clusters = clusters.expect("cluster ids required for clustered SEs");
            let n_clusters = clusters.iter().copied().max().map_or(0, |m| m + 1);
            let mut scores = vec![DVector::<f64>::zeros(k); n_clusters];
            for i in 0..n {
                let xi = design.row(i);
                let s = &mut scores[clusters[i]];
                for a in 0..k {
                    s[a] += residuals[i] * xi[a];
                }
            }
            let mut meat = DMatrix::zeros(k, k);
            for s in &scores {
                for a in 0..k {
                    for b in 0..k {
                        meat[(a, b)] += s[a] * s[b];
                    }
                }
            }
            let g = n_clusters.max(2) as f64;
            let correction = g / (g - 1.0) * ((n as f64 - 1.0) / df);
            xtx_inv * meat * xtx_inv * correction
        }
    }
}

/// Two-sided p-value from the t distribution with `df_resid` degrees of
/// freedom. Exact fits (se = 0) get p = 0 for nonzero estimates.
pub fn p_value(t: f64, df_resid: usize) -> f64 {
    if !t.is_finite() {
        return if t.is_nan() { 1.0 } else { 0.0 };
    }
    if df_resid == 0 {
        return 1.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df_resid as f64).expect("df > 0");
    2.0 * (1.0 - dist.cdf(t.abs()))
}

/// Stars at the 10/5/1 percent levels.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}
