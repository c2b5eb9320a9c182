//! Integer encoding of the joint objective.
//!
//! The objective `gamma * mean_i q(label_i, i) + (1 - gamma) * fidelity` is
//! multiplied by `N * SCALE` and split into per-row weights and per-class
//! penalties on the class count. The fidelity part of class `y` is the convex
//! function `|n * SCALE - T_y|` with `T_y = round(SCALE * N * ref_y)`; it is
//! represented by its unit increments, each rounded after weighting by
//! `1 - gamma`. Rounding is monotone, so the increments stay nondecreasing in
//! the unit index and integral min-cost flow remains exact for this integer
//! objective. Oracles evaluate the same integer objective, so comparisons are
//! exact.

use crate::error::{Error, Result};
use crate::matrix::ProbabilityMatrix;
use crate::metrics::{bias_vector, fidelity_from_bias};
use crate::labels::LabelAssignment;
use crate::reference::ReferenceDistribution;
use crate::scalar::Scalar;

/// Fixed-point scale applied to probabilities.
pub const SCALE: f64 = 1e9;

/// Cost of giving a class its `j`-th row (1-based).
#[derive(Debug, Clone, PartialEq)]
pub enum UnitCosts {
    /// Hard quota: units beyond `counts[y]` are unavailable, the rest are free.
    Quota(Vec<usize>),
    /// Convex L1 penalty around the scaled fractional targets.
    Convex { targets: Vec<i64>, weight: f64 },
}

/// Scaled integer instance shared by the solvers and their oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledObjective {
    n_rows: usize,
    n_classes: usize,
    weights: Vec<i64>,
    units: UnitCosts,
}

#[inline]
fn scale_prob(p: f64) -> i64 {
    (p * SCALE).round() as i64
}

impl ScaledObjective {
    /// Pure score maximization subject to exact class counts.
    pub fn quota<T: Scalar>(probs: &ProbabilityMatrix<T>, counts: &[usize]) -> Result<Self> {
        if counts.len() != probs.n_classes() {
            return Err(Error::ClassMismatch { expected: probs.n_classes(), got: counts.len() });
        }
        let total: usize = counts.iter().sum();
        if total != probs.n_rows() {
            return Err(Error::InfeasibleCounts { expected: probs.n_rows(), got: total });
        }
        let weights = probs.as_flat().iter().map(|p| scale_prob(p.as_f64())).collect();
        Ok(Self {
            n_rows: probs.n_rows(),
            n_classes: probs.n_classes(),
            weights,
            units: UnitCosts::Quota(counts.to_vec()),
        })
    }

    /// The `gamma`-weighted trade-off between score and fidelity to `reference`.
    pub fn gamma<T: Scalar>(
        probs: &ProbabilityMatrix<T>,
        reference: &ReferenceDistribution<T>,
        gamma: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!("gamma {gamma} not in [0, 1]")));
        }
        if reference.n_classes() != probs.n_classes() {
            return Err(Error::ClassMismatch { expected: probs.n_classes(), got: reference.n_classes() });
        }
        let n = probs.n_rows() as f64;
        let weights = probs
            .as_flat()
            .iter()
            .map(|p| (gamma * scale_prob(p.as_f64()) as f64).round() as i64)
            .collect();
        let targets = reference.weights().iter().map(|w| (SCALE * n * w.as_f64()).round() as i64).collect();
        Ok(Self {
            n_rows: probs.n_rows(),
            n_classes: probs.n_classes(),
            weights,
            units: UnitCosts::Convex { targets, weight: 1.0 - gamma },
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn units(&self) -> &UnitCosts {
        &self.units
    }

    #[inline]
    pub fn weight(&self, row: usize, class: usize) -> i64 {
        self.weights[row * self.n_classes + class]
    }

    /// Penalty for the `j`-th row (1-based) placed in `class`; `None` if the
    /// class cannot take it.
    #[inline]
    pub fn unit_cost(&self, class: usize, j: usize) -> Option<i64> {
        match &self.units {
            UnitCosts::Quota(counts) => (j <= counts[class]).then_some(0),
            UnitCosts::Convex { targets, weight } => {
                let t = targets[class];
                let s = SCALE as i64;
                let j = j as i64;
                let d = (j * s - t).abs() - ((j - 1) * s - t).abs();
                Some((weight * d as f64).round() as i64)
            }
        }
    }

    /// Largest number of rows `class` can take.
    pub fn capacity(&self, class: usize) -> usize {
        match &self.units {
            UnitCosts::Quota(counts) => counts[class],
            UnitCosts::Convex { .. } => self.n_rows,
        }
    }

    /// Integer objective (to maximize) of a complete labeling; `None` when a
    /// quota is exceeded.
    pub fn evaluate(&self, classes: &[usize]) -> Option<i64> {
        let mut counts = vec![0usize; self.n_classes];
        let mut total = 0i64;
        for (i, &y) in classes.iter().enumerate() {
            total += self.weight(i, y);
            counts[y] += 1;
        }
        for (y, &c) in counts.iter().enumerate() {
            for j in 1..=c {
                total -= self.unit_cost(y, j)?;
            }
        }
        Some(total)
    }
}

/// Unscaled value of the joint objective for a complete labeling.
pub fn gamma_objective<T: Scalar>(
    probs: &ProbabilityMatrix<T>,
    reference: &ReferenceDistribution<T>,
    gamma: f64,
    assign: &LabelAssignment,
) -> Result<f64> {
    let classes = assign.classes()?;
    if classes.len() != probs.n_rows() {
        return Err(Error::LengthMismatch { left: classes.len(), right: probs.n_rows() });
    }
    let score = mean_score(probs, &classes);
    let fid = fidelity_from_bias(&bias_vector(assign, reference)?).as_f64();
    Ok(gamma * score + (1.0 - gamma) * fid)
}

/// Mean probability of the chosen class.
pub fn mean_score<T: Scalar>(probs: &ProbabilityMatrix<T>, classes: &[usize]) -> f64 {
    classes.iter().enumerate().map(|(i, &y)| probs.get(i, y).as_f64()).sum::<f64>() / classes.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::ReferenceSource;

    #[test]
    fn convex_units_nondecreasing() {
        let p = ProbabilityMatrix::from_rows(&[[0.3, 0.7]; 7]).unwrap();
        let r = ReferenceDistribution::new(vec![0.37, 0.63], ReferenceSource::Custom).unwrap();
        for gamma in [0.0, 0.3, 0.77, 0.999, 1.0] {
            let obj = ScaledObjective::gamma(&p, &r, gamma).unwrap();
            for y in 0..2 {
                let costs: Vec<i64> = (1..=7).map(|j| obj.unit_cost(y, j).unwrap()).collect();
                assert!(costs.windows(2).all(|w| w[0] <= w[1]), "{costs:?}");
            }
        }
    }

    #[test]
    fn scaled_matches_float_objective() {
        let p = ProbabilityMatrix::from_rows(&[[0.2, 0.8], [0.55, 0.45], [0.9, 0.1]]).unwrap();
        let r = ReferenceDistribution::new(vec![0.4, 0.6], ReferenceSource::Custom).unwrap();
        let gamma = 0.7;
        let obj = ScaledObjective::gamma(&p, &r, gamma).unwrap();
        let UnitCosts::Convex { targets, .. } = obj.units() else { unreachable!() };
        let offset: f64 = targets.iter().map(|&t| (1.0 - gamma) * t as f64).sum();
        for labels in [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 1]] {
            let a = LabelAssignment::from_classes(labels.to_vec(), 2, "x").unwrap();
            let exact = gamma_objective(&p, &r, gamma, &a).unwrap();
            let scaled = (obj.evaluate(&labels).unwrap() as f64 - offset) / (SCALE * 3.0);
            assert!((exact - scaled).abs() < 1e-8, "{exact} vs {scaled}");
        }
    }

    #[test]
    fn quota_rejects_bad_totals() {
        let p = ProbabilityMatrix::from_rows(&[[0.5, 0.5]; 3]).unwrap();
        assert_eq!(
            ScaledObjective::quota(&p, &[1, 1]).unwrap_err(),
            Error::InfeasibleCounts { expected: 3, got: 2 }
        );
        let obj = ScaledObjective::quota(&p, &[2, 1]).unwrap();
        assert_eq!(obj.evaluate(&[1, 1, 0]), None);
        assert!(obj.evaluate(&[0, 1, 0]).is_some());
    }
}
