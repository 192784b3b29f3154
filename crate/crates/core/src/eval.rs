//! Repeated random-split evaluation, the α×β accuracy grid and the
//! transition-dimension sweep.
//!
//! Every repeat draws its split from [`SplitSpec`] keyed on the configured
//! seed and the repeat index, normalizes both partitions to unit-length
//! columns, fits from the cold start and scores held-out accuracy in percent.
//! Repeats run in parallel; results are always reported in repeat order.

use std::fmt;

use rayon::prelude::*;

use crate::baseline;
use crate::classifier;
use crate::data::{split, SplitSpec};
use crate::error::{Error, Result};
use crate::solver;
use crate::types::{Dataset, Hyperparams};

/// Candidate values for α and β in the sensitivity grid.
pub const DEFAULT_GRID: [f64; 7] = [0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    TslLsr,
    StandardLsr,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::TslLsr => f.write_str("tsl-lsr"),
            Algorithm::StandardLsr => f.write_str("lsr"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub per_class_train: usize,
    pub repeats: usize,
    pub seed: u64,
    pub hyperparams: Hyperparams,
    /// Ridge weight of the standard LSR baseline; `None` skips it.
    pub baseline_lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation; zero for a single repeat.
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len() as f64;
        if values.is_empty() {
            return Summary { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Summary { mean, std }
    }
}

/// Per-repeat held-out accuracies (percent).
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub tsl_lsr: Vec<f64>,
    pub baseline: Option<Vec<f64>>,
}

impl EvalReport {
    pub fn accuracies(&self, algorithm: Algorithm) -> Option<&[f64]> {
        match algorithm {
            Algorithm::TslLsr => Some(&self.tsl_lsr),
            Algorithm::StandardLsr => self.baseline.as_deref(),
        }
    }

    pub fn summary(&self, algorithm: Algorithm) -> Option<Summary> {
        self.accuracies(algorithm).map(Summary::of)
    }
}

/// Percentage of positions where `predicted` equals `truth`.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    100.0 * hits as f64 / truth.len() as f64
}

fn check_config(config: &EvalConfig) -> Result<()> {
    if config.repeats == 0 {
        return Err(Error::input("repeats must be at least 1"));
    }
    Ok(())
}

/// Normalized train and test partitions for one repeat.
pub fn prepare_repeat(dataset: &Dataset, config: &EvalConfig, repeat: usize) -> Result<(Dataset, Dataset)> {
    let spec = SplitSpec {
        per_class_train: config.per_class_train,
        seed: config.seed,
        repeat_index: repeat as u64,
    };
    let (train, test) = split(dataset, &spec)?;
    let test = test.ok_or_else(|| {
        Error::input("no test samples remain after the split; lower per_class_train")
    })?;
    Ok((train.normalized(), test.normalized()))
}

/// Held-out accuracy of the transition-subspace model, and of the baseline
/// when configured, for one repeat.
pub fn run_repeat(dataset: &Dataset, config: &EvalConfig, repeat: usize) -> Result<(f64, Option<f64>)> {
    let (train, test) = prepare_repeat(dataset, config, repeat)?;
    let (model, _) = solver::fit(&train, &config.hyperparams)?;
    let predicted = classifier::predict_nn_batch(&model, test.samples())?;
    let tsl = accuracy(&predicted, test.labels());

    let base = match config.baseline_lambda {
        Some(lambda) => {
            let w = baseline::solve_standard_lsr(train.samples(), train.label_matrix().matrix(), lambda)?;
            let predicted = baseline::predict_argmax_all(&w, test.samples())?;
            Some(accuracy(&predicted, test.labels()))
        }
        None => None,
    };
    Ok((tsl, base))
}

pub fn evaluate(dataset: &Dataset, config: &EvalConfig) -> Result<EvalReport> {
    check_config(config)?;
    let results = (0..config.repeats)
        .into_par_iter()
        .map(|r| run_repeat(dataset, config, r))
        .collect::<Result<Vec<_>>>()?;
    let tsl_lsr = results.iter().map(|r| r.0).collect();
    let baseline = config
        .baseline_lambda
        .map(|_| results.iter().map(|r| r.1.expect("baseline configured")).collect());
    Ok(EvalReport { tsl_lsr, baseline })
}

fn tsl_summary(dataset: &Dataset, config: &EvalConfig) -> Result<Summary> {
    let config = EvalConfig { baseline_lambda: None, ..*config };
    Ok(Summary::of(&evaluate(dataset, &config)?.tsl_lsr))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub alpha: f64,
    pub beta: f64,
    pub summary: Summary,
}

/// Mean and spread of accuracy over every `(alpha, beta)` pair, α-major.
pub fn grid_search(
    dataset: &Dataset,
    config: &EvalConfig,
    alphas: &[f64],
    betas: &[f64],
) -> Result<Vec<GridCell>> {
    check_config(config)?;
    let cells: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| betas.iter().map(move |&b| (a, b)))
        .collect();
    cells
        .into_par_iter()
        .map(|(alpha, beta)| {
            let hyperparams = config.hyperparams.to_builder().alpha(alpha).beta(beta).build()?;
            let summary = tsl_summary(dataset, &EvalConfig { hyperparams, ..*config })?;
            Ok(GridCell { alpha, beta, summary })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub p: usize,
    pub summary: Summary,
}

/// Accuracy for each transition dimension in `ps`.
pub fn sweep_p(dataset: &Dataset, config: &EvalConfig, ps: &[usize]) -> Result<Vec<SweepPoint>> {
    check_config(config)?;
    if let Some(bad) = ps.iter().find(|&&p| p < 1) {
        return Err(Error::input(format!("transition dimension must be at least 1, got {bad}")));
    }
    ps.par_iter()
        .map(|&p| {
            let hyperparams = config.hyperparams.to_builder().p(Some(p)).build()?;
            let summary = tsl_summary(dataset, &EvalConfig { hyperparams, ..*config })?;
            Ok(SweepPoint { p, summary })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{gaussian_blobs, orthogonal_centers};

    fn blobs() -> Dataset {
        let centers = orthogonal_centers(3, 8, 3.0).unwrap();
        gaussian_blobs(&centers, 12, 0.2, 5).unwrap()
    }

    fn config() -> EvalConfig {
        EvalConfig {
            per_class_train: 5,
            repeats: 3,
            seed: 11,
            hyperparams: Hyperparams::default(),
            baseline_lambda: Some(0.01),
        }
    }

    #[test]
    fn summary_stats() {
        let s = Summary::of(&[90.0, 92.0, 94.0]);
        assert_eq!(s.mean, 92.0);
        assert!((s.std - 2.0).abs() < 1e-12);
        assert_eq!(Summary::of(&[50.0]).std, 0.0);
    }

    #[test]
    fn accuracy_percent() {
        assert_eq!(accuracy(&[0, 1, 1, 2], &[0, 1, 2, 2]), 75.0);
    }

    #[test]
    fn evaluate_is_repeatable_and_sized() {
        let ds = blobs();
        let a = evaluate(&ds, &config()).unwrap();
        assert_eq!(a.tsl_lsr.len(), 3);
        assert_eq!(a.baseline.as_ref().unwrap().len(), 3);
        assert_eq!(a, evaluate(&ds, &config()).unwrap());
    }

    #[test]
    fn grid_and_sweep_shapes() {
        let ds = blobs();
        let cfg = EvalConfig { repeats: 1, ..config() };
        assert_eq!(grid_search(&ds, &cfg, &[0.1], &[0.1]).unwrap().len(), 1);
        assert_eq!(grid_search(&ds, &cfg, &[0.01, 0.1], &[0.1, 1.0, 0.5]).unwrap().len(), 6);
        let sweep = sweep_p(&ds, &cfg, &[1, 3, 6]).unwrap();
        assert_eq!(sweep.iter().map(|s| s.p).collect::<Vec<_>>(), vec![1, 3, 6]);
        assert!(sweep_p(&ds, &cfg, &[0]).is_err());
    }

    #[test]
    fn empty_test_partition_is_an_error() {
        let ds = blobs();
        let cfg = EvalConfig { per_class_train: 12, ..config() };
        assert!(matches!(evaluate(&ds, &cfg), Err(Error::Input(_))));
    }
}
