//! Accuracy and distributional metrics of a set of discrete labels.
//!
//! Distributional metrics compare the labels' class marginal against a
//! reference distribution: `bias(y)` is the signed excess of class `y`, and
//! `fidelity` is the negated L1 distance. They refuse assignments containing
//! uncoded rows; use [`LabelAssignment::labeled_subset`] first so the choice
//! of denominator stays explicit at the call site.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{ClassIndex, GroundTruth, Label, LabelAssignment};
use crate::matrix::ProbabilityMatrix;
use crate::reference::{ReferenceDistribution, ReferenceSource};
use crate::scalar::Scalar;

/// Column means of the probability matrix.
pub fn aggregate_posterior<T: Scalar>(probs: &ProbabilityMatrix<T>) -> ReferenceDistribution<T> {
    let k = probs.n_classes();
    let mut sums = vec![0.0f64; k];
    for row in probs.rows() {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v.as_f64();
        }
    }
    let n = probs.n_rows() as f64;
    let weights = sums.into_iter().map(|s| T::of(s / n)).collect();
    ReferenceDistribution::new(weights, ReferenceSource::AggregatePosterior)
        .expect("column means of a valid matrix form a distribution")
}

/// Fraction of rows carrying each label.
pub fn marginal_distribution<T: Scalar>(assign: &LabelAssignment) -> Result<Vec<T>> {
    if assign.is_empty() {
        return Err(Error::Empty);
    }
    let n = T::of(assign.len() as f64);
    Ok(assign.counts()?.into_iter().map(|c| T::of(c as f64) / n).collect())
}

pub fn bias<T: Scalar>(
    assign: &LabelAssignment,
    reference: &ReferenceDistribution<T>,
    y: ClassIndex,
) -> Result<T> {
    if y.0 >= reference.n_classes() {
        return Err(Error::ClassOutOfRange { index: y.0, n_classes: reference.n_classes() });
    }
    Ok(bias_vector(assign, reference)?[y.0])
}

/// `bias(y)` for every class.
pub fn bias_vector<T: Scalar>(
    assign: &LabelAssignment,
    reference: &ReferenceDistribution<T>,
) -> Result<Vec<T>> {
    if assign.n_classes() != reference.n_classes() {
        return Err(Error::ClassMismatch { expected: assign.n_classes(), got: reference.n_classes() });
    }
    let marg = marginal_distribution::<T>(assign)?;
    Ok(marg.iter().zip(reference.weights()).map(|(&m, &r)| m - r).collect())
}

pub fn fidelity<T: Scalar>(assign: &LabelAssignment, reference: &ReferenceDistribution<T>) -> Result<T> {
    Ok(fidelity_from_bias(&bias_vector(assign, reference)?))
}

#[inline]
pub(crate) fn fidelity_from_bias<T: Scalar>(bias: &[T]) -> T {
    -bias.iter().map(|b| b.abs()).sum::<T>()
}

/// Accuracy over labeled rows, and the fraction of rows that are labeled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy<T> {
    /// `None` when no row is labeled.
    pub accuracy: Option<T>,
    pub coverage: T,
}

pub fn accuracy<T: Scalar>(assign: &LabelAssignment, truth: &GroundTruth) -> Result<Accuracy<T>> {
    if assign.len() != truth.len() {
        return Err(Error::LengthMismatch { left: assign.len(), right: truth.len() });
    }
    if assign.is_empty() {
        return Err(Error::Empty);
    }
    let (mut labeled, mut correct) = (0usize, 0usize);
    for (l, &t) in assign.labels().iter().zip(truth.labels()) {
        if let Some(y) = l.class() {
            labeled += 1;
            correct += usize::from(y == t);
        }
    }
    let accuracy = (labeled > 0).then(|| T::of(correct as f64 / labeled as f64));
    Ok(Accuracy { accuracy, coverage: T::of(labeled as f64 / assign.len() as f64) })
}

/// Mean of `1 - q(true class)`.
pub fn mae<T: Scalar>(probs: &ProbabilityMatrix<T>, truth: &GroundTruth) -> Result<T> {
    if probs.n_rows() != truth.len() {
        return Err(Error::LengthMismatch { left: probs.n_rows(), right: truth.len() });
    }
    if probs.n_classes() != truth.n_classes() {
        return Err(Error::ClassMismatch { expected: probs.n_classes(), got: truth.n_classes() });
    }
    let total: f64 = probs
        .rows()
        .zip(truth.labels())
        .map(|(row, &y)| 1.0 - row[y].as_f64())
        .sum();
    Ok(T::of(total / probs.n_rows() as f64))
}

/// One equal-width bin of a reliability curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin<T> {
    pub lower: T,
    pub upper: T,
    pub center: T,
    /// Mean predicted probability of the bin's rows; `None` if empty.
    pub mean_predicted: Option<T>,
    /// Fraction of the bin's rows whose true class is the target class; `None` if empty.
    pub empirical_frequency: Option<T>,
    pub count: usize,
}

impl<T: Scalar> CalibrationBin<T> {
    /// Whether the empirical frequency lies within `z` binomial standard
    /// errors of the mean prediction. Empty bins pass trivially.
    pub fn within_binomial_band(&self, z: f64) -> bool {
        match (self.mean_predicted, self.empirical_frequency) {
            (Some(p), Some(f)) => {
                let p = p.as_f64();
                let se = (p * (1.0 - p) / self.count as f64).sqrt();
                (f.as_f64() - p).abs() <= z * se + 1e-12
            }
            _ => true,
        }
    }
}

/// Reliability curve for class `y`: bins `[b/n, (b+1)/n)` with the last bin closed.
pub fn calibration_curve<T: Scalar>(
    probs: &ProbabilityMatrix<T>,
    truth: &GroundTruth,
    y: ClassIndex,
    n_bins: usize,
) -> Result<Vec<CalibrationBin<T>>> {
    if n_bins == 0 {
        return Err(Error::InvalidParameter("n_bins must be at least 1".into()));
    }
    if probs.n_rows() != truth.len() {
        return Err(Error::LengthMismatch { left: probs.n_rows(), right: truth.len() });
    }
    if y.0 >= probs.n_classes() {
        return Err(Error::ClassOutOfRange { index: y.0, n_classes: probs.n_classes() });
    }
    let mut sum_pred = vec![0.0f64; n_bins];
    let mut hits = vec![0usize; n_bins];
    let mut counts = vec![0usize; n_bins];
    for (row, &t) in probs.rows().zip(truth.labels()) {
        let p = row[y.0].as_f64();
        let b = ((p * n_bins as f64) as usize).min(n_bins - 1);
        sum_pred[b] += p;
        hits[b] += usize::from(t == y.0);
        counts[b] += 1;
    }
    let width = 1.0 / n_bins as f64;
    Ok((0..n_bins)
        .map(|b| {
            let c = counts[b];
            CalibrationBin {
                lower: T::of(b as f64 * width),
                upper: T::of((b + 1) as f64 * width),
                center: T::of((b as f64 + 0.5) * width),
                mean_predicted: (c > 0).then(|| T::of(sum_pred[b] / c as f64)),
                empirical_frequency: (c > 0).then(|| T::of(hits[b] as f64 / c as f64)),
                count: c,
            }
        })
        .collect())
}

/// Summary of one rule's labels against a reference and, optionally, the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport<T> {
    pub accuracy: Option<T>,
    pub coverage: T,
    pub per_class_bias: Vec<T>,
    pub fidelity: T,
    pub mae: Option<T>,
}

impl<T: Scalar> MetricsReport<T> {
    /// Bias and fidelity use the labeled rows only; accuracy is labeled-only
    /// with coverage reported alongside.
    pub fn compute(
        assign: &LabelAssignment,
        reference: &ReferenceDistribution<T>,
        truth: Option<&GroundTruth>,
        probs: Option<&ProbabilityMatrix<T>>,
    ) -> Result<Self> {
        let (labeled, _) = assign.labeled_subset();
        let per_class_bias = if labeled.is_empty() {
            reference.weights().iter().map(|&w| -w).collect()
        } else {
            bias_vector(&labeled, reference)?
        };
        let fidelity = fidelity_from_bias(&per_class_bias);
        let (accuracy, coverage) = match truth {
            Some(t) => {
                let a = accuracy::<T>(assign, t)?;
                (a.accuracy, a.coverage)
            }
            None => {
                let n = assign.len().max(1) as f64;
                (None, T::of(labeled.len() as f64 / n))
            }
        };
        let mae = match (probs, truth) {
            (Some(p), Some(t)) => Some(mae(p, t)?),
            _ => None,
        };
        Ok(Self { accuracy, coverage, per_class_bias, fidelity, mae })
    }
}

/// Whether every row of `assign` is labeled.
pub fn is_fully_labeled(assign: &LabelAssignment) -> bool {
    assign.labels().iter().all(|l| !matches!(l, Label::Uncoded))
}
