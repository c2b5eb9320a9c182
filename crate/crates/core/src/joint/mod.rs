//! Joint decision rules: every row's label is chosen together so the overall
//! class distribution can be controlled.
//!
//! Both rules reduce to integral min-cost flow over a scaled integer
//! objective (see [`objective`]). [`match_to_reference`] hits exact integer
//! class counts while maximizing the summed probability of the chosen labels;
//! [`solve_gamma_program`] trades mean chosen probability against L1 fidelity
//! to a reference with weight `gamma`.

pub mod class_graph;
pub mod counts;
pub mod flow;
pub mod objective;

use std::collections::BTreeMap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::labels::{GroupKeys, LabelAssignment};
use crate::matrix::ProbabilityMatrix;
use crate::metrics::aggregate_posterior;
use crate::reference::ReferenceDistribution;
use crate::rules::TieOrder;
use crate::scalar::Scalar;

pub use counts::{target_counts, TargetCounts};
pub use flow::FlowNetwork;
pub use objective::{gamma_objective, mean_score, ScaledObjective, UnitCosts, SCALE};

pub const DEFAULT_BATCH_SIZE: usize = 10_000;

/// Which min-cost flow implementation to run. Both are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Successive shortest paths over the K class nodes only.
    #[default]
    ClassGraph,
    /// Successive shortest paths with potentials on the explicit network.
    /// Quadratic memory in practice; meant for small instances and cross-checks.
    Dense,
}

pub fn solve_scaled(obj: &ScaledObjective, ties: &TieOrder, solver: Solver) -> Result<Vec<usize>> {
    if ties.n_classes() != obj.n_classes() {
        return Err(Error::ClassMismatch { expected: obj.n_classes(), got: ties.n_classes() });
    }
    let out = match solver {
        Solver::ClassGraph => class_graph::solve(obj, ties),
        Solver::Dense => flow::solve_dense(obj),
    };
    out.ok_or_else(|| {
        let cap: usize = (0..obj.n_classes()).map(|y| obj.capacity(y)).sum();
        Error::InfeasibleCounts { expected: obj.n_rows(), got: cap }
    })
}

/// Exactly `counts[y]` rows get class `y`, maximizing the summed probability
/// of the chosen classes.
pub fn match_to_reference<T: Scalar>(
    probs: &ProbabilityMatrix<T>,
    counts: &TargetCounts,
    ties: &TieOrder,
) -> Result<LabelAssignment> {
    let obj = ScaledObjective::quota(probs, counts.counts())?;
    let classes = solve_scaled(&obj, ties, Solver::ClassGraph)?;
    LabelAssignment::from_classes(classes, probs.n_classes(), "match")
}

/// Instance of the `gamma`-weighted score/fidelity program.
#[derive(Debug, Clone, Copy)]
pub struct JointProblem<'a, T> {
    pub probs: &'a ProbabilityMatrix<T>,
    pub reference: &'a ReferenceDistribution<T>,
    pub gamma: f64,
}

impl<'a, T: Scalar> JointProblem<'a, T> {
    pub fn new(probs: &'a ProbabilityMatrix<T>, reference: &'a ReferenceDistribution<T>, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!("gamma {gamma} not in [0, 1]")));
        }
        if reference.n_classes() != probs.n_classes() {
            return Err(Error::ClassMismatch { expected: probs.n_classes(), got: reference.n_classes() });
        }
        Ok(Self { probs, reference, gamma })
    }

    pub fn scaled(&self) -> Result<ScaledObjective> {
        ScaledObjective::gamma(self.probs, self.reference, self.gamma)
    }

    /// Unscaled objective of a labeling.
    pub fn objective(&self, assign: &LabelAssignment) -> Result<f64> {
        gamma_objective(self.probs, self.reference, self.gamma, assign)
    }
}

pub fn solve_gamma_program<T: Scalar>(problem: &JointProblem<'_, T>, ties: &TieOrder) -> Result<LabelAssignment> {
    solve_gamma_program_with(problem, ties, Solver::ClassGraph)
}

pub fn solve_gamma_program_with<T: Scalar>(
    problem: &JointProblem<'_, T>,
    ties: &TieOrder,
    solver: Solver,
) -> Result<LabelAssignment> {
    let classes = solve_scaled(&problem.scaled()?, ties, solver)?;
    LabelAssignment::from_classes(classes, problem.probs.n_classes(), gamma_rule_id(problem.gamma))
}

pub fn gamma_rule_id(gamma: f64) -> String {
    format!("gamma:{gamma}")
}

/// Reference distribution for each group.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupReferences<T> {
    /// Each group's own aggregate posterior.
    OwnAggregate,
    Explicit(BTreeMap<String, ReferenceDistribution<T>>),
}

impl<T: Scalar> GroupReferences<T> {
    fn resolve(&self, group: &str, probs: &ProbabilityMatrix<T>) -> Result<ReferenceDistribution<T>> {
        match self {
            GroupReferences::OwnAggregate => Ok(aggregate_posterior(probs)),
            GroupReferences::Explicit(map) => {
                map.get(group).cloned().ok_or_else(|| Error::MissingGroupReference(group.to_string()))
            }
        }
    }
}

/// Matching solved separately inside every group.
pub fn conditional_match<T: Scalar>(
    probs: &ProbabilityMatrix<T>,
    groups: &GroupKeys,
    references: &GroupReferences<T>,
    ties: &TieOrder,
) -> Result<LabelAssignment> {
    conditional_match_batched(probs, groups, references, usize::MAX, ties)
}

/// Contiguous row ranges of nearly equal size, none larger than `batch_size`.
pub fn batch_ranges(n: usize, batch_size: usize) -> Vec<Range<usize>> {
    if n == 0 {
        return Vec::new();
    }
    let batch_size = batch_size.max(1);
    let n_batches = n.div_ceil(batch_size);
    let (base, extra) = (n / n_batches, n % n_batches);
    let mut out = Vec::with_capacity(n_batches);
    let mut start = 0;
    for b in 0..n_batches {
        let len = base + usize::from(b < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

/// Target distribution for each batch of a batched solve.
#[derive(Debug, Clone, PartialEq)]
pub enum BatchTarget<T> {
    /// The batch's own aggregate posterior.
    PerBatchAggregate,
    /// One distribution for every batch.
    Fixed(ReferenceDistribution<T>),
}

impl<T: Scalar> BatchTarget<T> {
    fn for_batch(&self, batch: &ProbabilityMatrix<T>) -> ReferenceDistribution<T> {
        match self {
            BatchTarget::PerBatchAggregate => aggregate_posterior(batch),
            BatchTarget::Fixed(r) => r.clone(),
        }
    }
}

fn run_batched<T: Scalar>(
    probs: &ProbabilityMatrix<T>,
    rows: &[usize],
    batch_size: usize,
    mut solve_batch: impl FnMut(&ProbabilityMatrix<T>) -> Result<LabelAssignment>,
) -> Result<Vec<(Vec<usize>, LabelAssignment)>> {
    batch_ranges(rows.len(), batch_size)
        .into_iter()
        .map(|range| {
            let idx = rows[range].to_vec();
            let sub = probs.select_rows(&idx)?;
            Ok((idx, solve_batch(&sub)?))
        })
        .collect()
}

/// Matching applied batch by batch; each batch is matched to the integer
/// apportionment of its target.
pub fn match_batched<T: Scalar>(
    probs: &ProbabilityMatrix<T>,
    target: &BatchTarget<T>,
    batch_size: usize,
    ties: &TieOrder,
) -> Result<LabelAssignment> {
    let rows: Vec<usize> = (0..probs.n_rows()).collect();
    let parts = run_batched(probs, &rows, batch_size, |b| {
        let counts = target_counts(&target.for_batch(b), b.n_rows(), ties)?;
        match_to_reference(b, &counts, ties)
    })?;
    LabelAssignment::scatter(probs.n_rows(), probs.n_classes(), "match", parts)
}

/// The `gamma` program applied batch by batch.
pub fn gamma_batched<T: Scalar>(
    probs: &ProbabilityMatrix<T>,
    target: &BatchTarget<T>,
    gamma: f64,
    batch_size: usize,
    ties: &TieOrder,
) -> Result<LabelAssignment> {
    let rows: Vec<usize> = (0..probs.n_rows()).collect();
    let parts = run_batched(probs, &rows, batch_size, |b| {
        let reference = target.for_batch(b);
        solve_gamma_program(&JointProblem::new(b, &reference, gamma)?, ties)
    })?;
    LabelAssignment::scatter(probs.n_rows(), probs.n_classes(), gamma_rule_id(gamma), parts)
}

/// Group-conditional matching with batches formed inside each group. With
/// [`GroupReferences::OwnAggregate`] each batch targets its own aggregate
/// posterior.
pub fn conditional_match_batched<T: Scalar>(
    probs: &ProbabilityMatrix<T>,
    groups: &GroupKeys,
    references: &GroupReferences<T>,
    batch_size: usize,
    ties: &TieOrder,
) -> Result<LabelAssignment> {
    if groups.len() != probs.n_rows() {
        return Err(Error::LengthMismatch { left: groups.len(), right: probs.n_rows() });
    }
    let mut parts = Vec::new();
    for (group, rows) in groups.partition() {
        let group_probs = probs.select_rows(&rows)?;
        let fixed = match references {
            GroupReferences::OwnAggregate => None,
            explicit => Some(explicit.resolve(group, &group_probs)?),
        };
        parts.extend(run_batched(probs, &rows, batch_size, |b| {
            let reference = match &fixed {
                Some(r) => r.clone(),
                None => aggregate_posterior(b),
            };
            let counts = target_counts(&reference, b.n_rows(), ties)?;
            match_to_reference(b, &counts, ties)
        })?);
    }
    LabelAssignment::scatter(probs.n_rows(), probs.n_classes(), "match:group", parts)
}
