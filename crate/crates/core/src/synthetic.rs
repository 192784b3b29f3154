//! Seeded Gaussian-blob datasets for benchmarks and tests.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::types::Dataset;

/// Class centers `s·e_j` on the first `num_classes` coordinate axes, scaled so
/// every pair is exactly `separation` apart. Returns a `dim × num_classes`
/// matrix.
pub fn orthogonal_centers(num_classes: usize, dim: usize, separation: f64) -> Result<DMatrix<f64>> {
    if num_classes > dim {
        return Err(Error::input(format!(
            "{num_classes} orthogonal centers need at least {num_classes} dimensions, got {dim}"
        )));
    }
    let scale = separation / std::f64::consts::SQRT_2;
    Ok(DMatrix::from_fn(dim, num_classes, |i, j| if i == j { scale } else { 0.0 }))
}

/// Class centers evenly spaced on a circle in the plane, with adjacent centers
/// `separation` apart. Returns a `2 × num_classes` matrix.
pub fn circle_centers(num_classes: usize, separation: f64) -> DMatrix<f64> {
    let step = std::f64::consts::TAU / num_classes as f64;
    let radius = separation / (2.0 * (step / 2.0).sin());
    DMatrix::from_fn(2, num_classes, |i, j| {
        let angle = step * j as f64;
        radius * if i == 0 { angle.cos() } else { angle.sin() }
    })
}

/// `per_class` isotropic Gaussian samples with standard deviation `sigma`
/// around each column of `centers`, grouped by class.
pub fn gaussian_blobs(centers: &DMatrix<f64>, per_class: usize, sigma: f64, seed: u64) -> Result<Dataset> {
    if per_class == 0 {
        return Err(Error::input("per_class must be at least 1"));
    }
    let noise = Normal::new(0.0, sigma)
        .map_err(|e| Error::input(format!("invalid sigma {sigma}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (d, c) = centers.shape();
    let mut samples = DMatrix::zeros(d, c * per_class);
    let mut labels = Vec::with_capacity(c * per_class);
    for class in 0..c {
        for k in 0..per_class {
            let col = class * per_class + k;
            for i in 0..d {
                samples[(i, col)] = centers[(i, class)] + noise.sample(&mut rng);
            }
            labels.push(class);
        }
    }
    Dataset::new(samples, labels, c)
}
