//! Shared value types: datasets, label matrices, hyperparameters, solver
//! state, trained models and fit reports.

use std::collections::HashSet;
use std::fmt;

use log::warn;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

/// Samples stored column-wise (`d` features × `n` samples) with dense class
/// indices in `[0, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: DMatrix<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    class_names: Vec<u64>,
}

impl Dataset {
    /// Builds a dataset whose class names are the dense indices themselves.
    pub fn new(samples: DMatrix<f64>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let class_names = (0..num_classes as u64).collect();
        Self::with_class_names(samples, labels, class_names)
    }

    /// Builds a dataset where dense class `j` corresponds to the external
    /// label `class_names[j]`.
    pub fn with_class_names(
        samples: DMatrix<f64>,
        labels: Vec<usize>,
        class_names: Vec<u64>,
    ) -> Result<Self> {
        let num_classes = class_names.len();
        if num_classes < 2 {
            return Err(Error::input(format!(
                "at least 2 classes are required, got {num_classes}"
            )));
        }
        let (d, n) = samples.shape();
        if d == 0 || n == 0 {
            return Err(Error::input(format!(
                "dataset must have at least one feature and one sample, got {d}x{n}"
            )));
        }
        if labels.len() != n {
            return Err(Error::input(format!(
                "{} labels supplied for {n} samples",
                labels.len()
            )));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
            return Err(Error::input(format!(
                "label {l} of sample {i} is out of range for {num_classes} classes"
            )));
        }
        if let Some(idx) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite value in sample {} (feature {})",
                idx / d,
                idx % d
            )));
        }
        let mut seen = HashSet::with_capacity(num_classes);
        if let Some(dup) = class_names.iter().find(|name| !seen.insert(**name)) {
            return Err(Error::input(format!("duplicate class name {dup}")));
        }

        let dataset = Dataset {
            samples,
            labels,
            num_classes,
            class_names,
        };
        for (class, count) in dataset.class_counts().iter().enumerate() {
            if *count == 0 {
                warn!("class {class} has no samples");
            }
        }
        Ok(dataset)
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn class_names(&self) -> &[u64] {
        &self.class_names
    }

    /// Feature dimension `d`.
    pub fn dim(&self) -> usize {
        self.samples.nrows()
    }

    /// Number of samples `n`.
    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn label_matrix(&self) -> LabelMatrix {
        one_hot_encode(&self.labels, self.num_classes)
            .expect("dataset labels are validated at construction")
    }

    /// Copy of the dataset with unit-length sample columns.
    pub fn normalized(&self) -> Dataset {
        Dataset {
            samples: normalize_columns(&self.samples),
            ..self.clone()
        }
    }

    /// Subset of the samples at `indices`, in the given order. Returns `None`
    /// when `indices` is empty.
    pub fn select(&self, indices: &[usize]) -> Option<Dataset> {
        if indices.is_empty() {
            return None;
        }
        let samples = self.samples.select_columns(indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Some(Dataset {
            samples,
            labels,
            num_classes: self.num_classes,
            class_names: self.class_names.clone(),
        })
    }
}

/// One-hot `c × n` label matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix(DMatrix<f64>);

impl LabelMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.nrows()
    }

    /// Column-wise argmax, which recovers the encoded labels.
    pub fn decode(&self) -> Vec<usize> {
        self.0
            .column_iter()
            .map(|col| linalg::argmax(col.iter().copied()))
            .collect()
    }
}

/// Encodes class indices as the columns of a one-hot matrix.
pub fn one_hot_encode(labels: &[usize], num_classes: usize) -> Result<LabelMatrix> {
    if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::input(format!(
            "label {bad} out of range for {num_classes} classes"
        )));
    }
    let mut h = DMatrix::zeros(num_classes, labels.len());
    for (i, &l) in labels.iter().enumerate() {
        h[(l, i)] = 1.0;
    }
    Ok(LabelMatrix(h))
}

/// Scales every column to unit Euclidean norm. All-zero columns are returned
/// unchanged.
pub fn normalize_samples(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("cannot normalize non-finite samples"));
    }
    Ok(normalize_columns(x))
}

fn normalize_columns(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    out
}

/// Regularization weights, transition dimension and ADMM schedule.
///
/// Construct through [`Hyperparams::builder`]; `build` rejects values outside
/// their admissible ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    alpha: f64,
    beta: f64,
    lambda1: f64,
    lambda2: f64,
    p: Option<usize>,
    mu0: f64,
    rho: f64,
    mu_max: f64,
    tol: f64,
    max_iters: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            alpha: 0.1,
            beta: 0.1,
            lambda1: 0.01,
            lambda2: 0.01,
            p: None,
            mu0: 1e-5,
            rho: 1.1,
            mu_max: 1e8,
            tol: 1e-6,
            max_iters: 500,
        }
    }
}

impl Hyperparams {
    pub fn builder() -> HyperparamsBuilder {
        HyperparamsBuilder(Hyperparams::default())
    }

    /// Builder seeded with these values, for deriving a modified copy.
    pub fn to_builder(self) -> HyperparamsBuilder {
        HyperparamsBuilder(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }
    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }
    /// Explicit transition dimension, if one was set.
    pub fn p(&self) -> Option<usize> {
        self.p
    }
    pub fn mu0(&self) -> f64 {
        self.mu0
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn mu_max(&self) -> f64 {
        self.mu_max
    }
    pub fn tol(&self) -> f64 {
        self.tol
    }
    pub fn max_iters(&self) -> usize {
        self.max_iters
    }

    /// Transition dimension for a problem with `num_classes` classes; defaults
    /// to the class count.
    pub fn resolved_p(&self, num_classes: usize) -> usize {
        self.p.unwrap_or(num_classes)
    }

    fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::input(format!("{name} must be positive and finite, got {v}")))
            }
        }
        fn nonnegative(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::input(format!("{name} must be non-negative and finite, got {v}")))
            }
        }
        positive("alpha", self.alpha)?;
        positive("beta", self.beta)?;
        nonnegative("lambda1", self.lambda1)?;
        nonnegative("lambda2", self.lambda2)?;
        positive("mu0", self.mu0)?;
        positive("tol", self.tol)?;
        if self.p == Some(0) {
            return Err(Error::input("transition dimension p must be at least 1"));
        }
        if !(self.rho.is_finite() && self.rho > 1.0) {
            return Err(Error::input(format!("rho must exceed 1, got {}", self.rho)));
        }
        if !(self.mu_max.is_finite() && self.mu_max >= self.mu0) {
            return Err(Error::input(format!(
                "mu_max ({}) must be finite and at least mu0 ({})",
                self.mu_max, self.mu0
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::input("max_iters must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HyperparamsBuilder(Hyperparams);

impl HyperparamsBuilder {
    pub fn alpha(mut self, v: f64) -> Self {
        self.0.alpha = v;
        self
    }
    pub fn beta(mut self, v: f64) -> Self {
        self.0.beta = v;
        self
    }
    pub fn lambda1(mut self, v: f64) -> Self {
        self.0.lambda1 = v;
        self
    }
    pub fn lambda2(mut self, v: f64) -> Self {
        self.0.lambda2 = v;
        self
    }
    pub fn p(mut self, v: Option<usize>) -> Self {
        self.0.p = v;
        self
    }
    pub fn mu0(mut self, v: f64) -> Self {
        self.0.mu0 = v;
        self
    }
    pub fn rho(mut self, v: f64) -> Self {
        self.0.rho = v;
        self
    }
    pub fn mu_max(mut self, v: f64) -> Self {
        self.0.mu_max = v;
        self
    }
    pub fn tol(mut self, v: f64) -> Self {
        self.0.tol = v;
        self
    }
    pub fn max_iters(mut self, v: usize) -> Self {
        self.0.max_iters = v;
        self
    }

    pub fn build(self) -> Result<Hyperparams> {
        self.0.validate()?;
        Ok(self.0)
    }
}

/// Iterates of the ADMM solver.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    /// Input projection, `p × d`.
    pub w: DMatrix<f64>,
    /// Output projection, `c × p`.
    pub q: DMatrix<f64>,
    /// Transition matrix, `p × n`.
    pub transition: DMatrix<f64>,
    /// Low-rank split copy of the transition matrix, `p × n`.
    pub auxiliary: DMatrix<f64>,
    /// Lagrange multiplier for `transition = auxiliary`, `p × n`.
    pub multiplier: DMatrix<f64>,
    pub mu: f64,
    pub iter: usize,
}

impl AdmmState {
    /// Cold start: projections, auxiliary and multiplier at zero, transition
    /// equal to the label matrix. For `p > c` the label matrix is padded with
    /// zero rows, for `p < c` it is truncated to its first `p` rows.
    pub fn initial(d: usize, p: usize, labels: &LabelMatrix, mu0: f64) -> Self {
        let h = labels.matrix();
        let (c, n) = h.shape();
        let mut transition = DMatrix::zeros(p, n);
        let rows = p.min(c);
        transition.rows_mut(0, rows).copy_from(&h.rows(0, rows));
        AdmmState {
            w: DMatrix::zeros(p, d),
            q: DMatrix::zeros(c, p),
            transition,
            auxiliary: DMatrix::zeros(p, n),
            multiplier: DMatrix::zeros(p, n),
            mu: mu0,
            iter: 0,
        }
    }

    /// `(d, n, c, p)` implied by the iterate shapes.
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (
            self.w.ncols(),
            self.transition.ncols(),
            self.q.nrows(),
            self.transition.nrows(),
        )
    }

    pub fn check_shapes(&self) -> Result<()> {
        let (d, n, c, p) = self.dims();
        let expect = [
            ("W", self.w.shape(), (p, d)),
            ("Q", self.q.shape(), (c, p)),
            ("auxiliary", self.auxiliary.shape(), (p, n)),
            ("multiplier", self.multiplier.shape(), (p, n)),
        ];
        for (name, got, want) in expect {
            if got != want {
                return Err(Error::input(format!(
                    "{name} has shape {got:?}, expected {want:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.mu.is_finite()
            && [
                &self.w,
                &self.q,
                &self.transition,
                &self.auxiliary,
                &self.multiplier,
            ]
            .iter()
            .all(|m| m.iter().all(|v| v.is_finite()))
    }

    /// Split residual, the entrywise max of `|transition - auxiliary|`.
    pub fn residual(&self) -> f64 {
        linalg::max_abs_diff(&self.transition, &self.auxiliary)
    }
}

/// Training features (`c × n`) and their labels, kept for nearest-neighbor
/// classification.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredFeatures {
    features: DMatrix<f64>,
    labels: Vec<usize>,
}

impl StoredFeatures {
    pub fn new(features: DMatrix<f64>, labels: Vec<usize>) -> Result<Self> {
        if features.ncols() != labels.len() || labels.is_empty() {
            return Err(Error::input(format!(
                "{} stored feature columns but {} labels",
                features.ncols(),
                labels.len()
            )));
        }
        Ok(StoredFeatures { features, labels })
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

/// Trained pair of projections.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    w: DMatrix<f64>,
    q: DMatrix<f64>,
    hyperparams: Hyperparams,
    stored: Option<StoredFeatures>,
    class_names: Vec<u64>,
}

impl Model {
    pub fn new(
        w: DMatrix<f64>,
        q: DMatrix<f64>,
        hyperparams: Hyperparams,
        stored: Option<StoredFeatures>,
        class_names: Vec<u64>,
    ) -> Result<Self> {
        let (p, d) = w.shape();
        let (c, qp) = q.shape();
        if p == 0 || d == 0 || c == 0 {
            return Err(Error::input("model projections must be non-empty"));
        }
        if qp != p {
            return Err(Error::input(format!(
                "W is {p}x{d} but Q is {c}x{qp}; inner dimensions disagree"
            )));
        }
        if class_names.len() != c {
            return Err(Error::input(format!(
                "{} class names for {c} classes",
                class_names.len()
            )));
        }
        if let Some(s) = &stored {
            if s.features.nrows() != c {
                return Err(Error::input(format!(
                    "stored features have {} rows, expected {c}",
                    s.features.nrows()
                )));
            }
            if let Some(&l) = s.labels.iter().find(|&&l| l >= c) {
                return Err(Error::input(format!("stored label {l} out of range")));
            }
        }
        let finite = w.iter().chain(q.iter()).all(|v| v.is_finite())
            && stored
                .as_ref()
                .is_none_or(|s| s.features.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::numerical("model contains non-finite entries"));
        }
        let hyperparams = hyperparams.to_builder().p(Some(p)).build()?;
        Ok(Model {
            w,
            q,
            hyperparams,
            stored,
            class_names,
        })
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyperparams
    }

    pub fn stored(&self) -> Option<&StoredFeatures> {
        self.stored.as_ref()
    }

    pub fn class_names(&self) -> &[u64] {
        &self.class_names
    }

    /// Copy of the model without stored training features.
    pub fn without_stored(&self) -> Model {
        Model {
            stored: None,
            ..self.clone()
        }
    }

    /// `(d, p, c)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.w.ncols(), self.w.nrows(), self.q.nrows())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIters,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::Converged => f.write_str("converged"),
            StopReason::MaxIters => f.write_str("max_iters"),
        }
    }
}

/// Per-iteration diagnostics of a fit. Entry `k` of every trace was recorded
/// at the end of iteration `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub objective_trace: Vec<f64>,
    pub residual_trace: Vec<f64>,
    pub mu_trace: Vec<f64>,
    pub iterations_run: usize,
    pub stop_reason: StopReason,
}
