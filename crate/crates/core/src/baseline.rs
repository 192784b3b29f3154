//! Standard ridge least squares regression onto one-hot targets, decided by
//! argmax.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, add_diagonal, cholesky, solve_right};

/// `W = HXᵀ(XXᵀ + λI)⁻¹`, the minimizer of `‖WX − H‖² + λ‖W‖²`.
pub fn solve_standard_lsr(x: &DMatrix<f64>, labels: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    if x.ncols() != labels.ncols() {
        return Err(Error::input(format!(
            "{} samples but {} label columns",
            x.ncols(),
            labels.ncols()
        )));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::input(format!("ridge weight must be non-negative, got {lambda}")));
    }
    let system = add_diagonal(x * x.transpose(), lambda);
    let factor = cholesky(system, "XXᵀ + λI")?;
    let w = solve_right(&factor, &(labels * x.transpose()));
    linalg::ensure_finite(&w, "LSR projection")?;
    Ok(w)
}

/// `argmax_i (Wy)_i`, lowest index on ties.
pub fn predict_argmax(w: &DMatrix<f64>, y: &DVector<f64>) -> Result<usize> {
    if w.ncols() != y.len() {
        return Err(Error::input(format!(
            "projection expects {} features, sample has {}",
            w.ncols(),
            y.len()
        )));
    }
    Ok(linalg::argmax((w * y).iter().copied()))
}

/// [`predict_argmax`] for every column of `x`.
pub fn predict_argmax_all(w: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<Vec<usize>> {
    if w.ncols() != x.nrows() {
        return Err(Error::input(format!(
            "projection expects {} features, samples have {}",
            w.ncols(),
            x.nrows()
        )));
    }
    let scores = w * x;
    Ok(scores
        .column_iter()
        .map(|col| linalg::argmax(col.iter().copied()))
        .collect())
}
