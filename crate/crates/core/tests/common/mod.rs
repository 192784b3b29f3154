//! Independent oracles shared by the integration and acceptance tests. None
//! of this goes through the solver's closed forms.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform in [-1, 1].
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_labels(rng: &mut ChaCha8Rng, c: usize, n: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(c, n);
    for j in 0..n {
        // First c columns cover every class.
        let l = if j < c { j } else { rng.random_range(0..c) };
        h[(l, j)] = 1.0;
    }
    h
}

/// Plain gradient descent with fixed step `1 / lipschitz`, stopped after
/// `max_steps` or once the gradient norm falls below `grad_tol`.
pub fn gradient_descent(
    start: DMatrix<f64>,
    lipschitz: f64,
    max_steps: usize,
    grad_tol: f64,
    grad: impl Fn(&DMatrix<f64>) -> DMatrix<f64>,
) -> DMatrix<f64> {
    let step = 1.0 / lipschitz;
    let mut x = start;
    for _ in 0..max_steps {
        let g = grad(&x);
        if g.norm() < grad_tol {
            break;
        }
        x -= step * g;
    }
    x
}

/// Central finite-difference gradient of `f` at `x`.
pub fn finite_difference(x: &DMatrix<f64>, h: f64, f: impl Fn(&DMatrix<f64>) -> f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(x.nrows(), x.ncols());
    let mut probe = x.clone();
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            let orig = probe[(i, j)];
            probe[(i, j)] = orig + h;
            let up = f(&probe);
            probe[(i, j)] = orig - h;
            let down = f(&probe);
            probe[(i, j)] = orig;
            g[(i, j)] = (up - down) / (2.0 * h);
        }
    }
    g
}

/// Nuclear norm from the eigenvalues of `MᵀM` or `MMᵀ`, whichever is smaller.
pub fn nuclear_norm_via_eigen(m: &DMatrix<f64>) -> f64 {
    let gram = if m.nrows() <= m.ncols() { m * m.transpose() } else { m.transpose() * m };
    gram.symmetric_eigenvalues()
        .iter()
        .map(|&e| e.max(0.0).sqrt())
        .sum()
}

/// `t‖P‖_* + ½‖P − M‖²_F`.
pub fn prox_objective(p: &DMatrix<f64>, m: &DMatrix<f64>, t: f64) -> f64 {
    t * nuclear_norm_via_eigen(p) + 0.5 * (p - m).norm_squared()
}

/// Relative Frobenius distance.
pub fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}
