use crate::error::{Error, Result};
use crate::reference::ReferenceDistribution;
use crate::rules::TieOrder;
use crate::scalar::Scalar;

/// Integer number of rows each class should receive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetCounts {
    counts: Vec<usize>,
}

impl TargetCounts {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::TooFewClasses(counts.len()));
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }
}

/// Largest-remainder apportionment of `n` rows to `reference`; equal
/// remainders go to the class earliest in `ties`.
pub fn target_counts<T: Scalar>(
    reference: &ReferenceDistribution<T>,
    n: usize,
    ties: &TieOrder,
) -> Result<TargetCounts> {
    if n == 0 {
        return Err(Error::Empty);
    }
    let k = reference.n_classes();
    if ties.n_classes() != k {
        return Err(Error::ClassMismatch { expected: k, got: ties.n_classes() });
    }
    let quotas: Vec<f64> = reference.weights().iter().map(|w| w.as_f64() * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    // Floating error can push the floors one past n in pathological cases.
    let mut remaining = n.saturating_sub(assigned);
    let mut order: Vec<usize> = ties.order().to_vec();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal)
    });
    for &y in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        counts[y] += 1;
        remaining -= 1;
    }
    let mut excess = counts.iter().sum::<usize>().saturating_sub(n);
    for &y in order.iter().rev() {
        while excess > 0 && counts[y] > 0 {
            counts[y] -= 1;
            excess -= 1;
        }
    }
    TargetCounts::new(counts)
}
