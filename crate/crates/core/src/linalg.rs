//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance under which a column counts as linearly dependent.
const RANK_TOL: f64 = 1e-10;

/// Least-squares solution of `x * beta ≈ y` via Householder QR.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub beta: DVector<f64>,
    pub residuals: DVector<f64>,
    /// `(X'X)^{-1}`.
    pub xtx_inv: DMatrix<f64>,
}

/// Returns the indices of columns that are numerically dependent on earlier
/// columns, each paired with the earlier columns that span it.
pub fn dependent_columns(x: &DMatrix<f64>) -> Vec<(usize, Vec<usize>)> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    for k in 0..x.ncols() {
        let col = x.column(k).into_owned();
        let norm = col.norm();
        let mut r = col.clone();
        for q in &basis {
            let proj = q.dot(&r);
            r -= q * proj;
        }
        let rn = r.norm();
        if norm == 0.0 || rn <= RANK_TOL * norm.max(1.0) {
            // Express the column in terms of the kept ones to name the set.
            let span: Vec<usize> = if kept.is_empty() || norm == 0.0 {
                Vec::new()
            } else {
                let sub = x.select_columns(&kept);
                let coef = sub
                    .clone()
                    .svd(true, true)
                    .solve(&col, 1e-12)
                    .unwrap_or_else(|_| DVector::zeros(kept.len()));
                let scale = coef.amax().max(f64::MIN_POSITIVE);
                kept.iter()
                    .zip(coef.iter())
                    .filter(|(_, c)| c.abs() > 1e-8 * scale)
                    .map(|(&j, _)| j)
                    .collect()
            };
            out.push((k, span));
        } else {
            basis.push(r / rn);
            kept.push(k);
        }
    }
    out
}

/// Ordinary least squares. `names` label the columns for rank errors.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<LeastSquares> {
    if x.nrows() != y.len() {
        return Err(Error::dims("regressand length", x.nrows(), y.len()));
    }
    if x.nrows() < x.ncols() {
        return Err(Error::invalid(format!(
            "{} observations for {} regressors",
            x.nrows(),
            x.ncols()
        )));
    }
    let deps = dependent_columns(x);
    if let Some((k, span)) = deps.first() {
        let mut set: Vec<String> = span.iter().map(|&j| names[j].clone()).collect();
        set.push(names[*k].clone());
        return Err(Error::RankDeficient(set));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::RankDeficient(names.to_vec()))?;
    let rinv = r
        .solve_upper_triangular(&DMatrix::identity(x.ncols(), x.ncols()))
        .ok_or_else(|| Error::RankDeficient(names.to_vec()))?;
    let xtx_inv = &rinv * rinv.transpose();
    let residuals = y - x * &beta;
    Ok(LeastSquares {
        beta,
        residuals,
        xtx_inv,
    })
}

/// Inverse of a symmetric positive definite matrix, `None` if not SPD.
pub fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let sym = symmetrize(m);
    nalgebra::Cholesky::new(sym).map(|c| c.inverse())
}

/// Log-determinant of an SPD matrix.
pub fn spd_log_det(m: &DMatrix<f64>) -> Option<f64> {
    let chol = nalgebra::Cholesky::new(symmetrize(m))?;
    Some(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Row-major nested vectors, the layout used in serialized results.
pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Inverse of [`to_rows`]. Rows must have equal length.
pub fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let ncols = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn ols_exact_line() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0, 7.0]);
        let ls = least_squares(&x, &y, &names(2)).unwrap();
        assert_relative_eq!(ls.beta[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(ls.beta[1], 2.0, epsilon = 1e-12);
        assert!(ls.residuals.amax() < 1e-12);
    }

    #[test]
    fn collinear_columns_are_named() {
        // x2 = x0 + x1
        let x = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 1.0, 5.0, //
                1.0, 1.0, 2.0, 1.0, //
                1.0, 2.0, 3.0, 0.0, //
                1.0, 3.0, 4.0, 2.0,
            ],
        );
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        match least_squares(&x, &y, &names(4)) {
            Err(Error::RankDeficient(set)) => assert_eq!(set, vec!["x0", "x1", "x2"]),
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn spd_helpers() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let inv = spd_inverse(&m).unwrap();
        let id = &m * inv;
        assert_relative_eq!(id, DMatrix::identity(2, 2), epsilon = 1e-12);
        assert_relative_eq!(spd_log_det(&m).unwrap(), 11f64.ln(), epsilon = 1e-12);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(spd_inverse(&bad).is_none());
    }
}
