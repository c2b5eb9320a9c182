use crate::error::{Error, Result};
use crate::reference::ReferenceDistribution;
use crate::scalar::Scalar;

/// Priority among classes for breaking exact ties: earlier wins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TieOrder {
    order: Vec<usize>,
    rank: Vec<usize>,
}

impl TieOrder {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let k = order.len();
        if k < 2 {
            return Err(Error::TooFewClasses(k));
        }
        let mut rank = vec![usize::MAX; k];
        for (r, &y) in order.iter().enumerate() {
            if y >= k || rank[y] != usize::MAX {
                return Err(Error::InvalidTieOrder(format!("{order:?} is not a permutation of 0..{k}")));
            }
            rank[y] = r;
        }
        Ok(Self { order, rank })
    }

    pub fn identity(n_classes: usize) -> Self {
        Self::new((0..n_classes).collect()).expect("identity is a permutation")
    }

    /// Descending reference weight, ties by class index.
    pub fn by_frequency<T: Scalar>(reference: &ReferenceDistribution<T>) -> Self {
        let w = reference.weights();
        let mut order: Vec<usize> = (0..w.len()).collect();
        order.sort_by(|&a, &b| w[b].partial_cmp(&w[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
        Self::new(order).expect("sorted indices are a permutation")
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    #[inline]
    pub fn rank(&self, y: usize) -> usize {
        self.rank[y]
    }

    pub fn n_classes(&self) -> usize {
        self.order.len()
    }

    /// Class with the largest value, earliest in this order among exact ties.
    pub fn argmax<T: PartialOrd + Copy>(&self, values: &[T]) -> usize {
        let mut best = self.order[0];
        for &y in &self.order[1..] {
            if values[y] > values[best] {
                best = y;
            }
        }
        best
    }
}
