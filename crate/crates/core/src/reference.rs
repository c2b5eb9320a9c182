use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::GroundTruth;
use crate::scalar::Scalar;

/// Where a reference distribution came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSource {
    AggregatePosterior,
    GroundTruthMarginal,
    Uniform,
    Custom,
}

/// Target class distribution the labels should reproduce.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceDistribution<T> {
    weights: Vec<T>,
    source: ReferenceSource,
}

impl<T: Scalar> ReferenceDistribution<T> {
    /// Validates nonnegativity and a unit sum (within the ingestion band),
    /// then rescales to sum to one.
    pub fn new(weights: Vec<T>, source: ReferenceSource) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::TooFewClasses(weights.len()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return Err(Error::InvalidReference("weights must be finite and nonnegative".into()));
        }
        let sum: T = weights.iter().copied().sum();
        if (sum.as_f64() - 1.0).abs() > T::INGEST_TOLERANCE {
            return Err(Error::InvalidReference(format!("weights sum to {sum}, not 1")));
        }
        let weights = weights.into_iter().map(|w| w / sum).collect();
        Ok(Self { weights, source })
    }

    pub fn uniform(n_classes: usize) -> Result<Self> {
        let w = T::one() / T::of(n_classes as f64);
        Self::new(vec![w; n_classes], ReferenceSource::Uniform)
    }

    /// Empirical class distribution of the true labels.
    pub fn truth_marginal(truth: &GroundTruth) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::Empty);
        }
        let mut counts = vec![0usize; truth.n_classes()];
        for &y in truth.labels() {
            counts[y] += 1;
        }
        let n = T::of(truth.len() as f64);
        Self::new(
            counts.into_iter().map(|c| T::of(c as f64) / n).collect(),
            ReferenceSource::GroundTruthMarginal,
        )
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn n_classes(&self) -> usize {
        self.weights.len()
    }

    pub fn source(&self) -> ReferenceSource {
        self.source
    }
}
