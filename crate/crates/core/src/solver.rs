//! ADMM solver for transition subspace learning.
//!
//! The model learns an input projection `W` (`p × d`), a transition matrix
//! `Ω` (`p × n`) and an output projection `Q` (`c × p`) by minimizing
//!
//! ```text
//! ½‖WX − Ω‖²_F + α‖Ω‖_* + (β/2)‖QΩ − H‖²_F + (λ₁/2)‖W‖²_F + (λ₂/2)‖Q‖²_F
//! ```
//!
//! The nuclear norm is split off onto an auxiliary copy `P` of `Ω`, and each
//! iteration updates `W`, `Q`, `Ω`, `P`, the multiplier `Y` and the penalty
//! `μ` in that order. `W`, `Q` and `Ω` have closed forms obtained from
//! symmetric positive definite solves; `P` is a singular value thresholding
//! step.

use log::{debug, warn};
use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{self, add_diagonal, cholesky, solve_right};
use crate::types::{AdmmState, Dataset, FitReport, Hyperparams, Model, StopReason, StoredFeatures};

/// Factorization of `XXᵀ + λ₁I`, built once per fit and reused by every
/// `W` update.
#[derive(Debug, Clone)]
pub struct SolveCache {
    factor: Cholesky<f64, Dyn>,
    /// `Xᵀ(XXᵀ + λ₁I)⁻¹`, `n × d`.
    projection: DMatrix<f64>,
}

impl SolveCache {
    pub fn new(x: &DMatrix<f64>, lambda1: f64) -> Result<Self> {
        if !(lambda1.is_finite() && lambda1 >= 0.0) {
            return Err(Error::input(format!("lambda1 must be non-negative, got {lambda1}")));
        }
        let gram = add_diagonal(x * x.transpose(), lambda1);
        let factor = cholesky(gram, "XXᵀ + λ₁I").map_err(|_| {
            Error::numerical(format!(
                "XXᵀ + λ₁I is singular (λ₁ = {lambda1}); use lambda1 > 0 for rank-deficient data"
            ))
        })?;
        let projection = solve_right(&factor, &x.transpose());
        linalg::ensure_finite(&projection, "cached projection")?;
        Ok(SolveCache { factor, projection })
    }

    /// Solves `Z (XXᵀ + λ₁I) = rhs` for `Z`.
    pub fn solve_right(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        solve_right(&self.factor, rhs)
    }

    pub fn num_samples(&self) -> usize {
        self.projection.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.projection.ncols()
    }
}

/// `W = ΩXᵀ(XXᵀ + λ₁I)⁻¹`, the minimizer of `½‖WX − Ω‖² + (λ₁/2)‖W‖²`.
pub fn update_w(transition: &DMatrix<f64>, cache: &SolveCache) -> Result<DMatrix<f64>> {
    if transition.ncols() != cache.num_samples() {
        return Err(Error::input(format!(
            "transition has {} columns, cache was built for {} samples",
            transition.ncols(),
            cache.num_samples()
        )));
    }
    Ok(transition * &cache.projection)
}

/// `Q = βHΩᵀ(βΩΩᵀ + λ₂I)⁻¹`, the minimizer of
/// `(β/2)‖QΩ − H‖² + (λ₂/2)‖Q‖²`.
pub fn update_q(
    transition: &DMatrix<f64>,
    labels: &DMatrix<f64>,
    beta: f64,
    lambda2: f64,
) -> Result<DMatrix<f64>> {
    if transition.ncols() != labels.ncols() {
        return Err(Error::input(format!(
            "transition has {} columns but labels have {}",
            transition.ncols(),
            labels.ncols()
        )));
    }
    if !(beta > 0.0) || !(lambda2 >= 0.0) {
        return Err(Error::input(format!(
            "need beta > 0 and lambda2 >= 0, got beta = {beta}, lambda2 = {lambda2}"
        )));
    }
    let system = add_diagonal(beta * transition * transition.transpose(), lambda2);
    let factor = cholesky(system, "βΩΩᵀ + λ₂I")?;
    let rhs = beta * labels * transition.transpose();
    let q = solve_right(&factor, &rhs);
    linalg::ensure_finite(&q, "Q")?;
    Ok(q)
}

/// Fixed inputs of the transition-matrix sub-problem
///
/// ```text
/// ½‖WX − Ω‖² + (β/2)‖QΩ − H‖² + (μ/2)‖Ω − P + Y/μ‖²
/// ```
#[derive(Debug, Clone, Copy)]
pub struct TransitionStep<'a> {
    pub w: &'a DMatrix<f64>,
    pub x: &'a DMatrix<f64>,
    pub q: &'a DMatrix<f64>,
    pub labels: &'a DMatrix<f64>,
    pub auxiliary: &'a DMatrix<f64>,
    pub multiplier: &'a DMatrix<f64>,
    pub mu: f64,
    pub beta: f64,
}

impl TransitionStep<'_> {
    fn check(&self) -> Result<()> {
        let p = self.w.nrows();
        let n = self.x.ncols();
        let ok = self.w.ncols() == self.x.nrows()
            && self.q.shape() == (self.labels.nrows(), p)
            && self.labels.ncols() == n
            && self.auxiliary.shape() == (p, n)
            && self.multiplier.shape() == (p, n);
        if !ok {
            return Err(Error::input("inconsistent shapes in transition update"));
        }
        if !(self.mu > 0.0 && self.beta > 0.0) {
            return Err(Error::input(format!(
                "need mu > 0 and beta > 0, got mu = {}, beta = {}",
                self.mu, self.beta
            )));
        }
        Ok(())
    }

    /// `[(μ+1)I + βQᵀQ]⁻¹ (WX + βQᵀH + μP − Y)`.
    pub fn solve(&self) -> Result<DMatrix<f64>> {
        self.check()?;
        let qt = self.q.transpose();
        let system = add_diagonal(self.beta * &qt * self.q, self.mu + 1.0);
        let factor = cholesky(system, "(μ+1)I + βQᵀQ")?;
        let rhs = self.w * self.x + self.beta * &qt * self.labels + self.mu * self.auxiliary
            - self.multiplier;
        let omega = factor.solve(&rhs);
        linalg::ensure_finite(&omega, "transition matrix")?;
        Ok(omega)
    }

    pub fn objective(&self, omega: &DMatrix<f64>) -> f64 {
        let fit = (self.w * self.x - omega).norm_squared();
        let label_fit = (self.q * omega - self.labels).norm_squared();
        let split = (omega - self.auxiliary + self.multiplier / self.mu).norm_squared();
        0.5 * fit + 0.5 * self.beta * label_fit + 0.5 * self.mu * split
    }

    pub fn gradient(&self, omega: &DMatrix<f64>) -> DMatrix<f64> {
        (omega - self.w * self.x)
            + self.beta * self.q.transpose() * (self.q * omega - self.labels)
            + self.mu * (omega - self.auxiliary)
            + self.multiplier
    }
}

/// Transition update, see [`TransitionStep::solve`].
pub fn update_omega(step: &TransitionStep<'_>) -> Result<DMatrix<f64>> {
    step.solve()
}

/// `½‖WX − Ω‖² + (λ₁/2)‖W‖²`.
pub fn w_objective(w: &DMatrix<f64>, x: &DMatrix<f64>, transition: &DMatrix<f64>, lambda1: f64) -> f64 {
    0.5 * (w * x - transition).norm_squared() + 0.5 * lambda1 * w.norm_squared()
}

pub fn w_gradient(
    w: &DMatrix<f64>,
    x: &DMatrix<f64>,
    transition: &DMatrix<f64>,
    lambda1: f64,
) -> DMatrix<f64> {
    (w * x - transition) * x.transpose() + lambda1 * w
}

/// `(β/2)‖QΩ − H‖² + (λ₂/2)‖Q‖²`.
pub fn q_objective(
    q: &DMatrix<f64>,
    transition: &DMatrix<f64>,
    labels: &DMatrix<f64>,
    beta: f64,
    lambda2: f64,
) -> f64 {
    0.5 * beta * (q * transition - labels).norm_squared() + 0.5 * lambda2 * q.norm_squared()
}

pub fn q_gradient(
    q: &DMatrix<f64>,
    transition: &DMatrix<f64>,
    labels: &DMatrix<f64>,
    beta: f64,
    lambda2: f64,
) -> DMatrix<f64> {
    beta * (q * transition - labels) * transition.transpose() + lambda2 * q
}

/// Singular value thresholding: with `M = UΣVᵀ`, returns
/// `U max(Σ − threshold, 0) Vᵀ`, the proximal point of
/// `threshold·‖·‖_*` at `M`.
pub fn svt(m: &DMatrix<f64>, threshold: f64) -> Result<DMatrix<f64>> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Error::input(format!(
            "threshold must be non-negative and finite, got {threshold}"
        )));
    }
    linalg::ensure_finite(m, "SVT input")?;
    if threshold == 0.0 || m.is_empty() {
        return Ok(m.clone());
    }
    let svd = linalg::svd(m)?;
    let shrunk: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|s| (s - threshold).max(0.0))
        .collect();
    if shrunk.iter().all(|&s| s == 0.0) {
        return Ok(DMatrix::zeros(m.nrows(), m.ncols()));
    }
    let (Some(mut u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::numerical("SVD did not return singular vectors"));
    };
    for (mut col, s) in u.column_iter_mut().zip(&shrunk) {
        col *= *s;
    }
    Ok(u * v_t)
}

/// `P = svt(Ω + Y/μ, α/μ)`.
pub fn update_p(
    transition: &DMatrix<f64>,
    multiplier: &DMatrix<f64>,
    mu: f64,
    alpha: f64,
) -> Result<DMatrix<f64>> {
    if !(mu > 0.0) {
        return Err(Error::input(format!("mu must be positive, got {mu}")));
    }
    svt(&(transition + multiplier / mu), alpha / mu)
}

/// `Y + μ(Ω − P)`.
pub fn update_multiplier(
    multiplier: &DMatrix<f64>,
    transition: &DMatrix<f64>,
    auxiliary: &DMatrix<f64>,
    mu: f64,
) -> DMatrix<f64> {
    multiplier + mu * (transition - auxiliary)
}

/// `min(μ_max, ρμ)`.
pub fn update_penalty(mu: f64, rho: f64, mu_max: f64) -> f64 {
    (rho * mu).min(mu_max)
}

fn check_problem(state: &AdmmState, x: &DMatrix<f64>, labels: &DMatrix<f64>) -> Result<()> {
    state.check_shapes()?;
    let (d, n, c, _) = state.dims();
    if x.shape() != (d, n) {
        return Err(Error::input(format!(
            "samples are {:?}, state expects ({d}, {n})",
            x.shape()
        )));
    }
    if labels.shape() != (c, n) {
        return Err(Error::input(format!(
            "labels are {:?}, state expects ({c}, {n})",
            labels.shape()
        )));
    }
    Ok(())
}

fn smooth_terms(state: &AdmmState, x: &DMatrix<f64>, labels: &DMatrix<f64>, hp: &Hyperparams) -> f64 {
    0.5 * (&state.w * x - &state.transition).norm_squared()
        + 0.5 * hp.beta() * (&state.q * &state.transition - labels).norm_squared()
        + 0.5 * hp.lambda1() * state.w.norm_squared()
        + 0.5 * hp.lambda2() * state.q.norm_squared()
}

/// Value of the training objective at the state's `W`, `Q` and `Ω`.
pub fn objective(
    state: &AdmmState,
    x: &DMatrix<f64>,
    labels: &DMatrix<f64>,
    hp: &Hyperparams,
) -> Result<f64> {
    check_problem(state, x, labels)?;
    let nuclear = linalg::nuclear_norm(&state.transition)?;
    Ok(smooth_terms(state, x, labels, hp) + hp.alpha() * nuclear)
}

/// Augmented Lagrangian: the objective with the nuclear norm moved onto the
/// auxiliary variable, plus `(μ/2)‖Ω − P + Y/μ‖²`.
pub fn augmented_lagrangian(
    state: &AdmmState,
    x: &DMatrix<f64>,
    labels: &DMatrix<f64>,
    hp: &Hyperparams,
) -> Result<f64> {
    if !(state.mu > 0.0) {
        return Err(Error::State(format!("penalty must be positive, got {}", state.mu)));
    }
    check_problem(state, x, labels)?;
    let nuclear = linalg::nuclear_norm(&state.auxiliary)?;
    let penalty = 0.5
        * state.mu
        * (&state.transition - &state.auxiliary + &state.multiplier / state.mu).norm_squared();
    Ok(smooth_terms(state, x, labels, hp) + hp.alpha() * nuclear + penalty)
}

/// Runs one full ADMM iteration in place.
pub fn step(
    state: &mut AdmmState,
    x: &DMatrix<f64>,
    labels: &DMatrix<f64>,
    cache: &SolveCache,
    hp: &Hyperparams,
) -> Result<()> {
    state.w = update_w(&state.transition, cache)?;
    state.q = update_q(&state.transition, labels, hp.beta(), hp.lambda2())?;
    state.transition = update_omega(&TransitionStep {
        w: &state.w,
        x,
        q: &state.q,
        labels,
        auxiliary: &state.auxiliary,
        multiplier: &state.multiplier,
        mu: state.mu,
        beta: hp.beta(),
    })?;
    state.auxiliary = update_p(&state.transition, &state.multiplier, state.mu, hp.alpha())?;
    state.multiplier = update_multiplier(&state.multiplier, &state.transition, &state.auxiliary, state.mu);
    state.mu = update_penalty(state.mu, hp.rho(), hp.mu_max());
    state.iter += 1;
    if !state.is_finite() {
        return Err(Error::numerical("iterate became non-finite"));
    }
    Ok(())
}

/// Trains a model on `dataset` from the cold-start initialization.
///
/// Samples are used as given; callers normalize beforehand (see
/// [`Dataset::normalized`]). Stopping at `max_iters` is reported in the
/// [`FitReport`], not as an error.
pub fn fit(dataset: &Dataset, hp: &Hyperparams) -> Result<(Model, FitReport)> {
    let (state, report) = fit_state(dataset, hp)?;
    let features = &state.q * &state.transition;
    let stored = StoredFeatures::new(features, dataset.labels().to_vec())?;
    let model = Model::new(
        state.w,
        state.q,
        *hp,
        Some(stored),
        dataset.class_names().to_vec(),
    )?;
    Ok((model, report))
}

/// Like [`fit`], but returns the final solver state instead of a model.
pub fn fit_state(dataset: &Dataset, hp: &Hyperparams) -> Result<(AdmmState, FitReport)> {
    let x = dataset.samples();
    let labels = dataset.label_matrix();
    let h = labels.matrix();
    let p = hp.resolved_p(dataset.num_classes());
    if p == 0 {
        return Err(Error::input("transition dimension p must be at least 1"));
    }
    let cache = SolveCache::new(x, hp.lambda1())?;
    let mut state = AdmmState::initial(dataset.dim(), p, &labels, hp.mu0());

    let mut objective_trace = Vec::new();
    let mut residual_trace = Vec::new();
    let mut mu_trace = Vec::new();
    let mut stop_reason = StopReason::MaxIters;

    while state.iter < hp.max_iters() {
        let iteration = state.iter + 1;
        let at = |e| Error::Solver {
            iteration,
            source: Box::new(e),
        };
        step(&mut state, x, h, &cache, hp).map_err(at)?;
        let value = objective(&state, x, h, hp).map_err(at)?;
        let residual = state.residual();
        objective_trace.push(value);
        residual_trace.push(residual);
        mu_trace.push(state.mu);
        if residual <= hp.tol() {
            stop_reason = StopReason::Converged;
            break;
        }
    }

    match stop_reason {
        StopReason::Converged => debug!("converged after {} iterations", state.iter),
        StopReason::MaxIters => warn!(
            "stopped at max_iters = {} with residual {:e}",
            hp.max_iters(),
            residual_trace.last().copied().unwrap_or(f64::NAN)
        ),
    }

    let report = FitReport {
        objective_trace,
        residual_trace,
        mu_trace,
        iterations_run: state.iter,
        stop_reason,
    };
    Ok((state, report))
}
