//! Stable-rank invariants of persistence barcodes, parameterized by
//! contours.
//!
//! The pipeline: simulate point processes ([`processes`]), compute
//! Vietoris-Rips barcodes ([`persistence`]), turn them into stable ranks
//! under a chosen [`contour::Contour`] ([`stable_rank`]), and classify with
//! nearest mean stable ranks ([`classification`]). [`function_space`] holds
//! the step-function arithmetic and metrics everything is built on.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classification;
pub mod contour;
pub mod error;
pub mod ext;
pub mod function_space;
pub mod io;
pub mod persistence;
pub mod processes;
pub mod stable_rank;

pub use classification::{
    build_classifier, classify, cross_validate, mean_accuracy, Classifier, ConfusionMatrix,
    CrossValidation, CrossValidationParams, LabeledInvariantSet,
};
pub use contour::{
    check_contour_axioms, contour_inverse, contour_lines, eval_contour, truncate, Contour,
    ContourKind, ContourLine, Density,
};
pub use error::{Error, Result};
pub use ext::ExtendedReal;
pub use function_space::{
    interleaving_2d, interleaving_distance, limit_value, lp_distance, lp_hat_distance,
    pointwise_mean, Grid2DFunction, MonotoneL1, StepFunction,
};
pub use persistence::{
    pairwise_distances, vr_h0, vr_h1, vr_persistence, DistanceMatrix, PointCloud,
};
pub use processes::{simulate_batch, Process, ProcessSpec};
pub use stable_rank::{
    d_c_to_zero, life_span, rank, shift_barcode, stable_rank, stable_rank_2d, Bar, Barcode,
};
