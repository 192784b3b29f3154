//! Python bindings for the `tsl-lsr` library.
//!
//! Matrices cross the boundary as lists of rows. Sample matrices are
//! row-per-sample (`n × d`), as is usual in Python; labels are arbitrary
//! non-negative integers and come back unchanged from the predictors.
//! Samples passed to `fit`, `transform` and the predictors are L2-normalized
//! per sample first, matching the command-line tool.

use std::collections::HashMap;

use nalgebra::DMatrix;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tsl_lsr::eval::{self, Algorithm, EvalConfig};
use tsl_lsr::{baseline, classifier, data, model_io, solver, synthetic};
use tsl_lsr::{Dataset, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Input(_) | Error::Format { .. } => PyValueError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Builds an `r × c` matrix from `r` rows of equal length.
fn from_rows(rows: &[Vec<f64>], what: &str) -> PyResult<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(PyValueError::new_err(format!(
            "{what}: row {i} has {} entries, expected {ncols}",
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Row-per-sample input as a `d × n` sample matrix.
fn samples_from_rows(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    Ok(from_rows(rows, "samples")?.transpose())
}

fn normalized_samples(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    tsl_lsr::normalize_samples(&samples_from_rows(rows)?).map_err(to_py)
}

/// Dataset with classes numbered in order of first appearance.
fn dataset(samples: &[Vec<f64>], labels: &[u64]) -> PyResult<Dataset> {
    let x = samples_from_rows(samples)?;
    let mut index = HashMap::new();
    let mut names = Vec::new();
    let dense = labels
        .iter()
        .map(|&raw| {
            *index.entry(raw).or_insert_with(|| {
                names.push(raw);
                names.len() - 1
            })
        })
        .collect();
    Dataset::with_class_names(x, dense, names).map_err(to_py)
}

/// A trained transition-subspace model.
#[pyclass(name = "Model", module = "tsl_lsr", frozen)]
struct PyModel {
    inner: tsl_lsr::Model,
}

impl PyModel {
    fn external(&self, dense: Vec<usize>) -> Vec<u64> {
        let names = self.inner.class_names();
        dense.into_iter().map(|j| names[j]).collect()
    }
}

#[pymethods]
impl PyModel {
    /// `(d, p, c)`: input dimension, transition dimension, class count.
    #[getter]
    fn dims(&self) -> (usize, usize, usize) {
        self.inner.dims()
    }

    #[getter]
    fn w(&self) -> Vec<Vec<f64>> {
        to_rows(self.inner.w())
    }

    #[getter]
    fn q(&self) -> Vec<Vec<f64>> {
        to_rows(self.inner.q())
    }

    #[getter]
    fn class_names(&self) -> Vec<u64> {
        self.inner.class_names().to_vec()
    }

    #[getter]
    fn has_stored_features(&self) -> bool {
        self.inner.stored().is_some()
    }

    /// Features `Q W x` of each sample, one row per sample.
    fn transform(&self, py: Python<'_>, samples: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let x = normalized_samples(&samples)?;
        let feats = py.detach(|| classifier::transform(&self.inner, &x)).map_err(to_py)?;
        Ok(to_rows(&feats.transpose()))
    }

    /// Nearest-neighbour labels against the stored training features.
    fn predict_nn(&self, py: Python<'_>, samples: Vec<Vec<f64>>) -> PyResult<Vec<u64>> {
        let x = normalized_samples(&samples)?;
        let dense = py.detach(|| classifier::predict_nn_batch(&self.inner, &x)).map_err(to_py)?;
        Ok(self.external(dense))
    }

    /// Labels of the largest entry of `Q W x`.
    fn predict_argmax(&self, py: Python<'_>, samples: Vec<Vec<f64>>) -> PyResult<Vec<u64>> {
        let x = normalized_samples(&samples)?;
        let dense = py
            .detach(|| classifier::predict_argmax_tsl_batch(&self.inner, &x))
            .map_err(to_py)?;
        Ok(self.external(dense))
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        model_io::save_model(&self.inner, path).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<PyModel> {
        let inner = model_io::load_model(path).map_err(to_py)?;
        Ok(PyModel { inner })
    }

    fn to_text(&self) -> String {
        model_io::model_to_string(&self.inner)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<PyModel> {
        let inner = model_io::model_from_str(text).map_err(to_py)?;
        Ok(PyModel { inner })
    }

    fn __repr__(&self) -> String {
        let (d, p, c) = self.inner.dims();
        format!("Model(d={d}, p={p}, c={c})")
    }
}

/// Per-iteration diagnostics of a fit.
#[pyclass(name = "FitReport", module = "tsl_lsr", frozen, get_all)]
struct PyFitReport {
    objective_trace: Vec<f64>,
    residual_trace: Vec<f64>,
    mu_trace: Vec<f64>,
    iterations_run: usize,
    stop_reason: String,
}

#[pymethods]
impl PyFitReport {
    fn __repr__(&self) -> String {
        format!(
            "FitReport(iterations_run={}, stop_reason={:?})",
            self.iterations_run, self.stop_reason
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn hyperparams(
    alpha: f64,
    beta: f64,
    lambda1: f64,
    lambda2: f64,
    p: Option<usize>,
    tol: f64,
    max_iters: usize,
) -> PyResult<tsl_lsr::Hyperparams> {
    tsl_lsr::Hyperparams::builder()
        .alpha(alpha)
        .beta(beta)
        .lambda1(lambda1)
        .lambda2(lambda2)
        .p(p)
        .tol(tol)
        .max_iters(max_iters)
        .build()
        .map_err(to_py)
}

/// Trains a model on row-per-sample `samples` with integer `labels`.
#[pyfunction]
#[pyo3(signature = (samples, labels, *, alpha=0.1, beta=0.1, lambda1=0.01, lambda2=0.01, p=None, tol=1e-6, max_iters=500))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    samples: Vec<Vec<f64>>,
    labels: Vec<u64>,
    alpha: f64,
    beta: f64,
    lambda1: f64,
    lambda2: f64,
    p: Option<usize>,
    tol: f64,
    max_iters: usize,
) -> PyResult<(PyModel, PyFitReport)> {
    let hp = hyperparams(alpha, beta, lambda1, lambda2, p, tol, max_iters)?;
    let ds = dataset(&samples, &labels)?.normalized();
    let (model, report) = py.detach(|| solver::fit(&ds, &hp)).map_err(to_py)?;
    let report = PyFitReport {
        objective_trace: report.objective_trace,
        residual_trace: report.residual_trace,
        mu_trace: report.mu_trace,
        iterations_run: report.iterations_run,
        stop_reason: report.stop_reason.to_string(),
    };
    Ok((PyModel { inner: model }, report))
}

/// Repeated random-split evaluation. Returns per-repeat accuracies (percent)
/// and their mean and standard deviation, for TSL-LSR and optionally the
/// ridge baseline.
#[pyfunction]
#[pyo3(signature = (samples, labels, per_class_train, *, repeats=10, seed=0, alpha=0.1, beta=0.1, lambda1=0.01, lambda2=0.01, p=None, baseline_lambda=None))]
#[allow(clippy::too_many_arguments)]
fn evaluate<'py>(
    py: Python<'py>,
    samples: Vec<Vec<f64>>,
    labels: Vec<u64>,
    per_class_train: usize,
    repeats: usize,
    seed: u64,
    alpha: f64,
    beta: f64,
    lambda1: f64,
    lambda2: f64,
    p: Option<usize>,
    baseline_lambda: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let defaults = tsl_lsr::Hyperparams::default();
    let hp = hyperparams(alpha, beta, lambda1, lambda2, p, defaults.tol(), defaults.max_iters())?;
    let ds = dataset(&samples, &labels)?;
    let config = EvalConfig {
        per_class_train,
        repeats,
        seed,
        hyperparams: hp,
        baseline_lambda,
    };
    let report = py.detach(|| eval::evaluate(&ds, &config)).map_err(to_py)?;

    let out = PyDict::new(py);
    for (key, alg) in [("tsl_lsr", Algorithm::TslLsr), ("lsr", Algorithm::StandardLsr)] {
        if let (Some(accs), Some(s)) = (report.accuracies(alg), report.summary(alg)) {
            let entry = PyDict::new(py);
            entry.set_item("accuracies", accs.to_vec())?;
            entry.set_item("mean", s.mean)?;
            entry.set_item("std", s.std)?;
            out.set_item(key, entry)?;
        }
    }
    Ok(out)
}

/// Reads a row-per-sample CSV whose last column is the integer label.
/// Returns `(samples, labels)`.
#[pyfunction]
#[pyo3(signature = (path, has_header=false))]
fn load_csv(path: std::path::PathBuf, has_header: bool) -> PyResult<(Vec<Vec<f64>>, Vec<u64>)> {
    let ds = data::load_csv(path, has_header).map_err(to_py)?;
    let names = ds.class_names();
    let labels = ds.labels().iter().map(|&j| names[j]).collect();
    Ok((to_rows(&ds.samples().transpose()), labels))
}

/// Scales every sample (row) to unit L2 norm; all-zero rows are kept.
#[pyfunction]
fn normalize_samples(samples: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(&normalized_samples(&samples)?.transpose()))
}

/// One-hot rows: row `i` has a one in column `labels[i]`.
#[pyfunction]
fn one_hot_encode(labels: Vec<usize>, num_classes: usize) -> PyResult<Vec<Vec<f64>>> {
    let h = tsl_lsr::one_hot_encode(&labels, num_classes).map_err(to_py)?;
    Ok(to_rows(&h.matrix().transpose()))
}

/// Singular value thresholding: the proximal map of `threshold · ‖·‖_*`.
#[pyfunction]
fn svt(matrix: Vec<Vec<f64>>, threshold: f64) -> PyResult<Vec<Vec<f64>>> {
    let m = from_rows(&matrix, "matrix")?;
    Ok(to_rows(&solver::svt(&m, threshold).map_err(to_py)?))
}

/// Nuclear norm (sum of singular values).
#[pyfunction]
fn nuclear_norm(matrix: Vec<Vec<f64>>) -> PyResult<f64> {
    let m = from_rows(&matrix, "matrix")?;
    tsl_lsr::linalg::nuclear_norm(&m).map_err(to_py)
}

/// Ridge regression of one-hot targets onto samples. Returns the `c × d`
/// projection; classes are numbered by first appearance in `labels`.
#[pyfunction]
fn solve_standard_lsr(samples: Vec<Vec<f64>>, labels: Vec<u64>, lam: f64) -> PyResult<Vec<Vec<f64>>> {
    let ds = dataset(&samples, &labels)?;
    let w = baseline::solve_standard_lsr(ds.samples(), ds.label_matrix().matrix(), lam).map_err(to_py)?;
    Ok(to_rows(&w))
}

/// Gaussian blobs around `num_classes` mutually orthogonal centers at
/// pairwise distance `separation`. Returns `(samples, labels)`.
#[pyfunction]
#[pyo3(signature = (num_classes, dim, per_class, *, separation=3.0, sigma=0.2, seed=0))]
fn gaussian_blobs(
    num_classes: usize,
    dim: usize,
    per_class: usize,
    separation: f64,
    sigma: f64,
    seed: u64,
) -> PyResult<(Vec<Vec<f64>>, Vec<u64>)> {
    let centers = synthetic::orthogonal_centers(num_classes, dim, separation).map_err(to_py)?;
    let ds = synthetic::gaussian_blobs(&centers, per_class, sigma, seed).map_err(to_py)?;
    let labels = ds.labels().iter().map(|&j| j as u64).collect();
    Ok((to_rows(&ds.samples().transpose()), labels))
}

#[pymodule]
#[pyo3(name = "tsl_lsr")]
fn tsl_lsr_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyFitReport>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(load_csv, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_samples, m)?)?;
    m.add_function(wrap_pyfunction!(one_hot_encode, m)?)?;
    m.add_function(wrap_pyfunction!(svt, m)?)?;
    m.add_function(wrap_pyfunction!(nuclear_norm, m)?)?;
    m.add_function(wrap_pyfunction!(solve_standard_lsr, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_blobs, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_round_trip() {
        let rows = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
        let m = from_rows(&rows, "m").unwrap();
        assert_eq!(m.shape(), (2, 3));
        assert_eq!(m[(1, 0)], 4.0);
        assert_eq!(to_rows(&m), rows);
    }

    #[test]
    fn samples_are_columns() {
        let x = samples_from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(x.shape(), (2, 3));
        assert_eq!(x.column(2).as_slice(), &[5.0, 6.0]);
    }

    #[test]
    fn labels_keep_first_appearance_order() {
        let ds = dataset(&[vec![1.0], vec![2.0], vec![3.0]], &[7, 3, 7]).unwrap();
        assert_eq!(ds.class_names(), &[7, 3]);
        assert_eq!(ds.labels(), &[0, 1, 0]);
    }

    #[test]
    fn errors_map_to_python_types() {
        Python::initialize();
        Python::attach(|py| {
            assert!(from_rows(&[vec![1.0], vec![1.0, 2.0]], "m").unwrap_err().is_instance_of::<PyValueError>(py));
            assert!(to_py(Error::Numerical("x".into())).is_instance_of::<PyRuntimeError>(py));
            let io = Error::Io(std::io::Error::other("x"));
            assert!(to_py(io).is_instance_of::<PyIOError>(py));
        });
    }
}
