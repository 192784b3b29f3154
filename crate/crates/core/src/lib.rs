//! Least squares regression through a low-rank transition subspace.
//!
//! Instead of regressing samples straight onto one-hot labels, the model
//! learns two projections: `W` maps samples into a `p`-dimensional transition
//! subspace `Ω` kept low-rank by a nuclear-norm penalty, and `Q` maps that
//! subspace onto the labels. Training alternates closed-form updates under
//! ADMM ([`solver::fit`]); test samples are classified by the nearest
//! training feature in `QΩ` ([`classifier::predict_nn`]).
//!
//! The crate also ships the plain ridge LSR baseline, CSV ingestion with
//! seeded per-class splits, a text model format and a repeated-split
//! evaluation harness.

// Parameter checks are written as `!(x > 0.0)` on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod classifier;
pub mod data;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod model_io;
pub mod solver;
pub mod synthetic;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    normalize_samples, one_hot_encode, AdmmState, Dataset, FitReport, Hyperparams,
    HyperparamsBuilder, LabelMatrix, Model, StopReason, StoredFeatures,
};
