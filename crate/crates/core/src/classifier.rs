//! Prediction with a trained model: two-stage features `QWy`, classified by
//! the nearest stored training feature or by argmax.

use nalgebra::{DMatrix, DVector, DVectorView};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::types::Model;

fn check_features(model: &Model, rows: usize) -> Result<()> {
    let (d, _, _) = model.dims();
    if rows != d {
        return Err(Error::input(format!(
            "model expects {d} features, input has {rows}"
        )));
    }
    Ok(())
}

/// `Q(WX)`, one `c`-dimensional feature column per input column.
pub fn transform(model: &Model, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_features(model, x.nrows())?;
    Ok(model.q() * (model.w() * x))
}

fn transform_one(model: &Model, y: &DVector<f64>) -> Result<DVector<f64>> {
    check_features(model, y.len())?;
    Ok(model.q() * (model.w() * y))
}

/// Index of the closest column of `reference` in Euclidean distance; the
/// lowest index wins ties.
pub fn nearest_column(reference: &DMatrix<f64>, query: DVectorView<'_, f64>) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (j, col) in reference.column_iter().enumerate() {
        let dist: f64 = col
            .iter()
            .zip(query.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if dist < best_dist {
            best = j;
            best_dist = dist;
        }
    }
    best
}

fn stored(model: &Model) -> Result<(&DMatrix<f64>, &[usize])> {
    model
        .stored()
        .map(|s| (s.features(), s.labels()))
        .ok_or_else(|| Error::State("model has no stored training features".into()))
}

/// Label of the stored training feature nearest to `QWy`.
pub fn predict_nn(model: &Model, y: &DVector<f64>) -> Result<usize> {
    let (features, labels) = stored(model)?;
    let f = transform_one(model, y)?;
    Ok(labels[nearest_column(features, f.as_view())])
}

/// [`predict_nn`] for every column of `x`.
pub fn predict_nn_batch(model: &Model, x: &DMatrix<f64>) -> Result<Vec<usize>> {
    let (features, labels) = stored(model)?;
    let f = transform(model, x)?;
    Ok((0..f.ncols())
        .into_par_iter()
        .map(|j| labels[nearest_column(features, f.column(j))])
        .collect())
}

/// `argmax_i (QWy)_i`, for models without stored features.
pub fn predict_argmax_tsl(model: &Model, y: &DVector<f64>) -> Result<usize> {
    let f = transform_one(model, y)?;
    Ok(linalg::argmax(f.iter().copied()))
}

/// [`predict_argmax_tsl`] for every column of `x`.
pub fn predict_argmax_tsl_batch(model: &Model, x: &DMatrix<f64>) -> Result<Vec<usize>> {
    let f = transform(model, x)?;
    Ok(f.column_iter()
        .map(|col| linalg::argmax(col.iter().copied()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Hyperparams, StoredFeatures};

    fn model(w: DMatrix<f64>, q: DMatrix<f64>, stored: Option<StoredFeatures>) -> Model {
        let c = q.nrows();
        Model::new(w, q, Hyperparams::default(), stored, (0..c as u64).collect()).unwrap()
    }

    #[test]
    fn zero_projection_gives_zero_features() {
        let m = model(DMatrix::zeros(2, 3), DMatrix::from_element(2, 2, 1.0), None);
        let x = DMatrix::from_element(3, 4, 2.5);
        assert_eq!(transform(&m, &x).unwrap(), DMatrix::zeros(2, 4));
        let m = model(DMatrix::from_element(2, 3, 1.0), DMatrix::zeros(2, 2), None);
        assert_eq!(transform(&m, &x).unwrap(), DMatrix::zeros(2, 4));
    }

    #[test]
    fn transform_is_columnwise() {
        let w = DMatrix::from_fn(2, 3, |i, j| (i + 2 * j) as f64 - 1.5);
        let q = DMatrix::from_fn(3, 2, |i, j| (i * j) as f64 + 0.5);
        let m = model(w.clone(), q.clone(), None);
        let x = DMatrix::from_fn(3, 2, |i, j| (i as f64 - j as f64) * 0.7);
        let all = transform(&m, &x).unwrap();
        for k in 0..2 {
            let y = x.column(k).into_owned();
            assert_eq!(all.column(k), &q * (&w * &y));
            assert_eq!(all.column(k).into_owned(), transform_one(&m, &y).unwrap());
        }
        assert!(transform(&m, &DMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn single_stored_sample_always_wins() {
        let stored = StoredFeatures::new(DMatrix::from_column_slice(2, 1, &[0.3, -0.2]), vec![1]).unwrap();
        let m = model(DMatrix::identity(2, 2), DMatrix::identity(2, 2), Some(stored));
        for y in [[5.0, 5.0], [-3.0, 0.1], [0.0, 0.0]] {
            assert_eq!(predict_nn(&m, &DVector::from_column_slice(&y)).unwrap(), 1);
        }
    }

    #[test]
    fn nn_ties_pick_lowest_index() {
        let reference = DMatrix::from_column_slice(1, 3, &[1.0, -1.0, 1.0]);
        let q = DVector::from_vec(vec![0.0]);
        assert_eq!(nearest_column(&reference, q.as_view()), 0);
    }

    #[test]
    fn nn_without_features_is_state_error() {
        let m = model(DMatrix::identity(2, 2), DMatrix::identity(2, 2), None);
        let y = DVector::from_vec(vec![1.0, 0.0]);
        assert!(matches!(predict_nn(&m, &y), Err(Error::State(_))));
        assert!(matches!(predict_nn_batch(&m, &DMatrix::zeros(2, 1)), Err(Error::State(_))));
    }

    #[test]
    fn argmax_rule_examples() {
        let m = model(DMatrix::identity(2, 2), DMatrix::identity(2, 2), None);
        assert_eq!(predict_argmax_tsl(&m, &DVector::from_vec(vec![0.2, 0.7])).unwrap(), 1);
        assert_eq!(predict_argmax_tsl(&m, &DVector::from_vec(vec![0.4, 0.4])).unwrap(), 0);
    }
}
