//! Small dense helpers shared by the solver, baseline and classifier.

use nalgebra::{Cholesky, DMatrix, Dyn, SVD};

use crate::error::{Error, Result};

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITERS: usize = 10_000;

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn ensure_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::numerical(format!("{what} contains non-finite entries")))
    }
}

pub fn svd(m: &DMatrix<f64>) -> Result<SVD<f64, Dyn, Dyn>> {
    ensure_finite(m, "SVD input")?;
    SVD::try_new(m.clone(), true, true, SVD_EPS, SVD_MAX_ITERS)
        .ok_or_else(|| Error::numerical("SVD did not converge"))
}

/// Sum of singular values.
pub fn nuclear_norm(m: &DMatrix<f64>) -> Result<f64> {
    if m.is_empty() {
        return Ok(0.0);
    }
    Ok(svd(m)?.singular_values.sum())
}

pub fn cholesky(a: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    ensure_finite(&a, what)?;
    let n = a.nrows();
    let scale = a.diagonal().amax();
    let not_pd = || Error::numerical(format!("{what} is not positive definite"));
    let chol = Cholesky::new(a).ok_or_else(not_pd)?;
    // nalgebra accepts zero pivots; reject pivots at rounding level.
    let floor = n as f64 * f64::EPSILON * scale;
    if chol.l_dirty().diagonal().iter().any(|&p| !(p * p > floor)) {
        return Err(not_pd());
    }
    Ok(chol)
}

/// Solves `X A = B` for symmetric positive definite `A` given its Cholesky
/// factor.
pub fn solve_right(chol: &Cholesky<f64, Dyn>, b: &DMatrix<f64>) -> DMatrix<f64> {
    chol.solve(&b.transpose()).transpose()
}

/// `a + shift * I` for square `a`.
pub fn add_diagonal(mut a: DMatrix<f64>, shift: f64) -> DMatrix<f64> {
    for i in 0..a.nrows().min(a.ncols()) {
        a[(i, i)] += shift;
    }
    a
}

/// `‖A‖_F / max(‖B‖_F, tiny)`, for relative residual checks.
pub fn relative(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.norm() / b.norm().max(f64::MIN_POSITIVE)
}
