//! Rules that label each row from its own probability vector alone.

use rand::Rng;

use crate::error::{Error, Result};
use crate::labels::{Label, LabelAssignment};
use crate::matrix::ProbabilityMatrix;
use crate::rules::rng::{RngSeed, RowStreams};
use crate::rules::tie::TieOrder;
use crate::scalar::Scalar;

// Thompson and top-k share a stream domain so that top-K reproduces Thompson exactly.
const SAMPLING_DOMAIN: &str = "row-sampling";

fn check_ties<T: Scalar>(probs: &ProbabilityMatrix<T>, ties: &TieOrder) -> Result<()> {
    if ties.n_classes() != probs.n_classes() {
        return Err(Error::ClassMismatch { expected: probs.n_classes(), got: ties.n_classes() });
    }
    Ok(())
}

pub fn argmax_rule<T: Scalar>(probs: &ProbabilityMatrix<T>, ties: &TieOrder) -> Result<LabelAssignment> {
    check_ties(probs, ties)?;
    let labels = probs.rows().map(|row| Label::from(ties.argmax(row))).collect();
    LabelAssignment::new(labels, probs.n_classes(), "argmax")
}

/// Argmax where the top probability reaches `t`, uncoded elsewhere.
pub fn threshold_rule<T: Scalar>(
    probs: &ProbabilityMatrix<T>,
    t: T,
    ties: &TieOrder,
) -> Result<LabelAssignment> {
    check_ties(probs, ties)?;
    if !(t > T::zero() && t <= T::one()) {
        return Err(Error::InvalidParameter(format!("threshold {t} not in (0, 1]")));
    }
    let labels = probs
        .rows()
        .map(|row| {
            let y = ties.argmax(row);
            if row[y] >= t {
                Label::from(y)
            } else {
                Label::Uncoded
            }
        })
        .collect();
    LabelAssignment::new(labels, probs.n_classes(), format!("threshold:{t}"))
}

pub fn thompson_rule<T: Scalar>(probs: &ProbabilityMatrix<T>, seed: RngSeed) -> Result<LabelAssignment> {
    let streams = RowStreams::new(seed, SAMPLING_DOMAIN);
    let all: Vec<usize> = (0..probs.n_classes()).collect();
    let labels = probs
        .rows()
        .enumerate()
        .map(|(i, row)| {
            let u: f64 = streams.row(i as u64).random();
            Label::from(sample_among(row, &all, u))
        })
        .collect();
    Ok(LabelAssignment::new(labels, probs.n_classes(), "thompson")?.with_seed(seed.0))
}

/// Thompson sampling restricted to each row's `k` most probable classes.
pub fn topk_rule<T: Scalar>(
    probs: &ProbabilityMatrix<T>,
    k: usize,
    seed: RngSeed,
    ties: &TieOrder,
) -> Result<LabelAssignment> {
    check_ties(probs, ties)?;
    let n_classes = probs.n_classes();
    if k == 0 || k > n_classes {
        return Err(Error::InvalidParameter(format!("k = {k} not in 1..={n_classes}")));
    }
    let streams = RowStreams::new(seed, SAMPLING_DOMAIN);
    let mut by_rank: Vec<usize> = Vec::with_capacity(n_classes);
    let mut selected: Vec<usize> = Vec::with_capacity(k);
    let labels = probs
        .rows()
        .enumerate()
        .map(|(i, row)| {
            by_rank.clear();
            by_rank.extend_from_slice(ties.order());
            // Stable sort on descending probability keeps tie order among equals.
            by_rank.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap_or(std::cmp::Ordering::Equal));
            selected.clear();
            selected.extend_from_slice(&by_rank[..k]);
            selected.sort_unstable();
            let u: f64 = streams.row(i as u64).random();
            Label::from(sample_among(row, &selected, u))
        })
        .collect();
    Ok(LabelAssignment::new(labels, n_classes, format!("topk:{k}"))?.with_seed(seed.0))
}

/// Inverse-CDF draw over `classes` (ascending index order) with their
/// probabilities renormalized to the selected mass.
fn sample_among<T: Scalar>(row: &[T], classes: &[usize], u: f64) -> usize {
    let mass: f64 = classes.iter().map(|&y| row[y].as_f64()).sum();
    let target = u * mass;
    let mut cum = 0.0;
    let mut last_positive = classes[0];
    for &y in classes {
        let p = row[y].as_f64();
        if p > 0.0 {
            last_positive = y;
            cum += p;
            if cum > target {
                return y;
            }
        }
    }
    last_positive
}
