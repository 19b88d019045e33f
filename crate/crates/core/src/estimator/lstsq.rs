//! Least squares via Householder QR, with a collinearity screen that names
//! offending columns.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub struct LeastSquares {
    pub beta: DVector<f64>,
    /// (X'X)⁻¹ reconstructed from R.
    pub xtx_inv: DMatrix<f64>,
}

/// Flags columns that are (numerically) linear combinations of the columns
/// before them. Modified Gram-Schmidt with re-orthogonalization; a column
/// whose residual norm falls below `tol` × its own norm is collinear.
pub fn collinear_columns(x: &DMatrix<f64>, names: &[String], tol: f64) -> Vec<String> {
    let n = x.nrows();
    let k = x.ncols();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut flagged = Vec::new();
    for j in 0..k {
        let col = DVector::from_column_slice(x.column(j).as_slice());
        let scale = col.norm();
        if scale == 0.0 {
            flagged.push(names[j].clone());
            continue;
        }
        let mut r = col.clone();
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&r);
                r -= q * proj;
            }
        }
        if r.norm() <= tol * scale.max(1.0) * (n as f64).sqrt() {
            flagged.push(names[j].clone());
        } else {
            let norm = r.norm();
            basis.push(r / norm);
        }
    }
    flagged
}

/// Solves min ‖y − Xβ‖₂ for full-column-rank X (n ≥ k). Collinear columns
/// are reported by name; too few rows is an error.
pub fn solve(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<LeastSquares> {
    let n = x.nrows();
    let k = x.ncols();
    if n < k {
        return Err(Error::TooFewObservations { n_obs: n, n_params: k });
    }
    let flagged = collinear_columns(x, names, 1e-10);
    if !flagged.is_empty() {
        return Err(Error::RankDeficient(flagged));
    }
    let qr = x.clone().qr();
    let qty = qr.q().transpose() * y;
    let r = qr.r();
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Numeric("QR solve failed on screened matrix".to_string()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::Numeric("R inversion failed".to_string()))?;
    let xtx_inv = &r_inv * r_inv.transpose();
    Ok(LeastSquares { beta, xtx_inv })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn exact_line_recovered() {
        let x = DMatrix::from_columns(&[
            DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]),
            DVector::from_element(4, 1.0),
        ]);
        let y = DVector::from_vec(vec![2.0, 4.0, 6.0, 8.0]);
        let ls = solve(&x, &y, &names(2)).unwrap();
        assert!((ls.beta[0] - 2.0).abs() < 1e-12);
        assert!(ls.beta[1].abs() < 1e-12);
    }

    #[test]
    fn matches_normal_equations_on_five_points() {
        // Independent oracle: solve X'Xβ = X'y by hand-coded 2×2 elimination.
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [1.1, 1.9, 3.2, 3.9, 5.1];
        let n = 5.0;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|v| v * v).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| a * b).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;

        let x = DMatrix::from_columns(&[
            DVector::from_column_slice(&xs),
            DVector::from_element(5, 1.0),
        ]);
        let y = DVector::from_column_slice(&ys);
        let ls = solve(&x, &y, &names(2)).unwrap();
        assert!((ls.beta[0] - slope).abs() < 1e-10);
        assert!((ls.beta[1] - intercept).abs() < 1e-10);
    }

    #[test]
    fn collinear_column_named() {
        let a = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let b = &a * 2.0;
        let x = DMatrix::from_columns(&[a, b]);
        let y = DVector::from_element(4, 1.0);
        match solve(&x, &y, &["first".to_string(), "double_of_first".to_string()]) {
            Err(Error::RankDeficient(cols)) => assert_eq!(cols, vec!["double_of_first"]),
            other => panic!("expected rank-deficiency, got {:?}", other.map(|l| l.beta)),
        }
    }

    #[test]
    fn underdetermined_rejected() {
        let x = DMatrix::from_element(2, 3, 1.0);
        let y = DVector::from_element(2, 1.0);
        assert!(matches!(
            solve(&x, &y, &names(3)),
            Err(Error::TooFewObservations { n_obs: 2, n_params: 3 })
        ));
    }

    #[test]
    fn xtx_inv_is_inverse() {
        let x = DMatrix::from_columns(&[
            DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0]),
            DVector::from_vec(vec![1.0, 0.0, 1.0, 0.0, 1.0]),
            DVector::from_element(5, 1.0),
        ]);
        let y = DVector::from_element(5, 1.0);
        let ls = solve(&x, &y, &names(3)).unwrap();
        let prod = x.transpose() * &x * &ls.xtx_inv;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - want).abs() < 1e-8);
            }
        }
    }
}
