//! Turning multiclass probability predictions into discrete labels.
//!
//! Independent rules (argmax, thresholding, Thompson and top-k sampling)
//! label rows one at a time. Joint rules choose all labels together and can
//! match a reference class distribution exactly, at little cost in accuracy.
//! The simulator produces data with exact Bayes posteriors so the behaviour
//! of every rule can be measured against ground truth.
//!
//! All numeric types are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common `f64` instantiation.

pub mod error;
pub mod experiments;
pub mod heuristic;
pub mod io;
pub mod joint;
pub mod labels;
pub mod matrix;
pub mod metrics;
pub mod pipeline;
pub mod reference;
pub mod rules;
pub mod scalar;
pub mod simulator;

pub use error::{Error, Result};
pub use labels::{ClassIndex, GroundTruth, GroupKeys, Label, LabelAssignment};
pub use matrix::ProbabilityMatrix;
pub use pipeline::{apply_rule, ReferenceSpec, RuleContext, RuleSpec};
pub use metrics::{
    accuracy, aggregate_posterior, bias, bias_vector, calibration_curve, fidelity, mae,
    marginal_distribution, Accuracy, CalibrationBin, MetricsReport,
};
pub use reference::{ReferenceDistribution, ReferenceSource};
pub use rules::{RngSeed, TieOrder};
pub use scalar::Scalar;

pub type ProbabilityMatrixF64 = ProbabilityMatrix<f64>;
pub type ProbabilityMatrixF32 = ProbabilityMatrix<f32>;
pub type ReferenceF64 = ReferenceDistribution<f64>;
pub type ReferenceF32 = ReferenceDistribution<f32>;
pub type MetricsReportF64 = MetricsReport<f64>;
