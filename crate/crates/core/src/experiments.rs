//! Monte Carlo experiments over simulated data: rule comparisons, the
//! accuracy/fidelity frontier of the `gamma` program, and argmax bias as a
//! function of classifier informativeness.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{GroundTruth, LabelAssignment};
use crate::matrix::ProbabilityMatrix;
use crate::metrics::{aggregate_posterior, mae, MetricsReport};
use crate::pipeline::{apply_rule, default_ties, RuleContext, RuleSpec};
use crate::reference::ReferenceDistribution;
use crate::rules::{argmax_rule, derive_seed, RngSeed, TieOrder};
use crate::simulator::{simulate_gaussian, simulate_worst_case, GaussianSimConfig, WorstCaseConfig};

/// `0.80, 0.81, ..., 0.99`.
pub fn default_gammas() -> Vec<f64> {
    (80..100).map(|i| i as f64 / 100.0).collect()
}

/// Mean and standard error across replicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub se: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, se: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self { mean, se: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self { mean, se: (var / n as f64).sqrt() }
    }
}

/// The metrics reported for one rule on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleMetrics {
    pub rule: String,
    /// Accuracy on labeled rows; absent without ground truth.
    pub accuracy: Option<f64>,
    pub coverage: f64,
    pub bias_aggregate: Vec<f64>,
    pub fidelity_aggregate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias_truth: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity_truth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias_reference: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity_reference: Option<f64>,
}

impl RuleMetrics {
    /// `extra` adds bias and fidelity against one more reference.
    pub fn compute(
        assign: &LabelAssignment,
        probs: &ProbabilityMatrix<f64>,
        truth: Option<&GroundTruth>,
        extra: Option<&ReferenceDistribution<f64>>,
    ) -> Result<Self> {
        let agg = MetricsReport::compute(assign, &aggregate_posterior(probs), truth, None)?;
        let vs_truth = truth
            .map(|t| MetricsReport::compute(assign, &ReferenceDistribution::truth_marginal(t)?, Some(t), None))
            .transpose()?;
        let vs_extra = extra.map(|r| MetricsReport::compute(assign, r, truth, None)).transpose()?;
        Ok(Self {
            rule: assign.rule_id.clone(),
            accuracy: agg.accuracy,
            coverage: agg.coverage,
            bias_aggregate: agg.per_class_bias,
            fidelity_aggregate: agg.fidelity,
            fidelity_truth: vs_truth.as_ref().map(|r| r.fidelity),
            bias_truth: vs_truth.map(|r| r.per_class_bias),
            fidelity_reference: vs_extra.as_ref().map(|r| r.fidelity),
            bias_reference: vs_extra.map(|r| r.per_class_bias),
        })
    }
}

/// Runs each rule on one dataset and reports its metrics.
pub fn run_rule_comparison(
    probs: &ProbabilityMatrix<f64>,
    truth: Option<&GroundTruth>,
    rules: &[RuleSpec],
    ctx: &RuleContext<'_>,
) -> Result<Vec<RuleMetrics>> {
    let ties = default_ties(probs, ctx)?;
    rules
        .iter()
        .map(|&rule| RuleMetrics::compute(&apply_rule(probs, rule, ctx, &ties)?, probs, truth, None))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Ascending, each in `[0, 1]`.
    pub gammas: Vec<f64>,
    pub replicates: usize,
    /// Replicate `r` simulates with a seed derived from `sim.seed` and `r`.
    pub sim: GaussianSimConfig,
    pub rules: Vec<RuleSpec>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            gammas: default_gammas(),
            replicates: 100,
            sim: GaussianSimConfig::default(),
            rules: vec![RuleSpec::Argmax, RuleSpec::Match, RuleSpec::Thompson, RuleSpec::TopK(2)],
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be positive".into()));
        }
        if self.rules.is_empty() {
            return Err(Error::InvalidParameter("rule list is empty".into()));
        }
        if self.gammas.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(Error::InvalidParameter("gammas must lie in [0, 1]".into()));
        }
        if self.gammas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("gammas must be strictly ascending".into()));
        }
        if self.rules.iter().any(|r| r.needs_groups()) {
            return Err(Error::InvalidParameter("simulated data has no groups".into()));
        }
        Ok(())
    }

    /// The listed rules followed by one `gamma` rule per grid point.
    pub fn all_rules(&self) -> Vec<RuleSpec> {
        let mut all = self.rules.clone();
        all.extend(self.gammas.iter().map(|&g| RuleSpec::Gamma(g)));
        all
    }
}

/// One rule on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub replicate: usize,
    pub gamma: Option<f64>,
    pub metrics: RuleMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSummary {
    pub rule: String,
    pub gamma: Option<f64>,
    pub replicates: usize,
    pub accuracy: Stat,
    pub coverage: Stat,
    pub fidelity_aggregate: Stat,
    pub fidelity_truth: Stat,
    pub mean_bias_aggregate: Vec<f64>,
    pub mean_bias_truth: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub gamma: f64,
    pub accuracy: Stat,
    pub fidelity_aggregate: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub mean_mae: Stat,
    pub records: Vec<SweepRecord>,
    pub summaries: Vec<RuleSummary>,
    pub frontier: Vec<FrontierPoint>,
    /// Accuracy nondecreasing and fidelity nonincreasing along the frontier,
    /// each within one standard error.
    pub frontier_monotone: bool,
}

impl SweepResult {
    pub fn summary(&self, rule: &str) -> Option<&RuleSummary> {
        self.summaries.iter().find(|s| s.rule == rule)
    }

    /// Per-replicate values of `f` for `rule`, in replicate order.
    pub fn per_replicate(&self, rule: &str, f: impl Fn(&RuleMetrics) -> f64) -> Vec<f64> {
        self.records.iter().filter(|r| r.metrics.rule == rule).map(|r| f(&r.metrics)).collect()
    }

    /// Tidy long format: one line per rule, gamma and replicate.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let k = self.config.sim.k;
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header: Vec<String> = [
            "rule",
            "gamma",
            "replicate",
            "accuracy",
            "coverage",
            "fidelity_aggregate",
            "fidelity_truth",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend((0..k).map(|y| format!("bias_aggregate_c{y}")));
        header.extend((0..k).map(|y| format!("bias_truth_c{y}")));
        w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            let m = &r.metrics;
            let mut row = vec![
                m.rule.clone(),
                opt(r.gamma),
                r.replicate.to_string(),
                opt(m.accuracy),
                m.coverage.to_string(),
                m.fidelity_aggregate.to_string(),
                opt(m.fidelity_truth),
            ];
            row.extend(m.bias_aggregate.iter().map(f64::to_string));
            match &m.bias_truth {
                Some(b) => row.extend(b.iter().map(f64::to_string)),
                None => row.extend(std::iter::repeat_n(String::new(), k)),
            }
            w.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Everything except the per-replicate records.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "config": self.config,
            "mean_mae": self.mean_mae,
            "summaries": self.summaries,
            "frontier": self.frontier,
            "frontier_monotone": self.frontier_monotone,
        })
    }
}

fn replicate_seed(base: u64, r: usize) -> RngSeed {
    derive_seed(RngSeed(base), r as u64)
}

fn mean_vec(rows: &[&Vec<f64>]) -> Vec<f64> {
    let Some(first) = rows.first() else { return Vec::new() };
    let mut acc = vec![0.0; first.len()];
    for row in rows {
        acc.iter_mut().zip(row.iter()).for_each(|(a, v)| *a += v);
    }
    acc.iter().map(|a| a / rows.len() as f64).collect()
}

/// Simulates `cfg.replicates` datasets and runs every rule, including the
/// `gamma` program at every grid point, on each.
pub fn pareto_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let rules = cfg.all_rules();
    let per_replicate: Vec<(f64, Vec<SweepRecord>)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = replicate_seed(cfg.sim.seed, r);
            let data = simulate_gaussian::<f64>(&GaussianSimConfig { seed: seed.0, ..cfg.sim.clone() })?;
            let ctx = RuleContext { seed, truth: Some(&data.truth), ..Default::default() };
            let metrics = run_rule_comparison(&data.probs, Some(&data.truth), &rules, &ctx)?;
            let records = rules
                .iter()
                .zip(metrics)
                .map(|(rule, metrics)| SweepRecord {
                    replicate: r,
                    gamma: match rule {
                        RuleSpec::Gamma(g) => Some(*g),
                        _ => None,
                    },
                    metrics,
                })
                .collect();
            Ok((mae(&data.probs, &data.truth)?, records))
        })
        .collect::<Result<_>>()?;

    let maes: Vec<f64> = per_replicate.iter().map(|(m, _)| *m).collect();
    let records: Vec<SweepRecord> = per_replicate.into_iter().flat_map(|(_, r)| r).collect();
    let summaries: Vec<RuleSummary> = rules
        .iter()
        .map(|rule| {
            let id = rule.to_string();
            let rows: Vec<&SweepRecord> = records.iter().filter(|r| r.metrics.rule == id).collect();
            let col = |f: &dyn Fn(&RuleMetrics) -> Option<f64>| {
                Stat::of(&rows.iter().filter_map(|r| f(&r.metrics)).collect::<Vec<_>>())
            };
            RuleSummary {
                gamma: rows[0].gamma,
                replicates: rows.len(),
                accuracy: col(&|m| m.accuracy),
                coverage: col(&|m| Some(m.coverage)),
                fidelity_aggregate: col(&|m| Some(m.fidelity_aggregate)),
                fidelity_truth: col(&|m| m.fidelity_truth),
                mean_bias_aggregate: mean_vec(&rows.iter().map(|r| &r.metrics.bias_aggregate).collect::<Vec<_>>()),
                mean_bias_truth: mean_vec(&rows.iter().filter_map(|r| r.metrics.bias_truth.as_ref()).collect::<Vec<_>>()),
                rule: id,
            }
        })
        .collect();
    let frontier: Vec<FrontierPoint> = summaries
        .iter()
        .filter_map(|s| {
            s.gamma.map(|gamma| FrontierPoint { gamma, accuracy: s.accuracy, fidelity_aggregate: s.fidelity_aggregate })
        })
        .collect();
    let frontier_monotone = frontier.windows(2).all(|w| {
        let (a, b) = (&w[0], &w[1]);
        b.accuracy.mean >= a.accuracy.mean - a.accuracy.se.max(b.accuracy.se)
            && b.fidelity_aggregate.mean <= a.fidelity_aggregate.mean + a.fidelity_aggregate.se.max(b.fidelity_aggregate.se)
    });
    Ok(SweepResult { config: cfg.clone(), mean_mae: Stat::of(&maes), records, summaries, frontier, frontier_monotone })
}

/// Argmax bias at one noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InformationPoint {
    pub sigma: f64,
    pub mae: Stat,
    /// Per class, against each replicate's aggregate posterior.
    pub bias_aggregate: Vec<Stat>,
    /// Per class, against each replicate's true class marginal.
    pub bias_truth: Vec<Stat>,
}

fn per_class_stats(rows: &[Vec<f64>], k: usize) -> Vec<Stat> {
    (0..k).map(|y| Stat::of(&rows.iter().map(|b| b[y]).collect::<Vec<_>>())).collect()
}

/// MAE and argmax bias for each `sigma`, averaged over `replicates` datasets.
pub fn bias_vs_information(sigmas: &[f64], base: &GaussianSimConfig, replicates: usize) -> Result<Vec<InformationPoint>> {
    if sigmas.is_empty() || replicates == 0 {
        return Err(Error::InvalidParameter("need at least one sigma and one replicate".into()));
    }
    sigmas
        .iter()
        .map(|&sigma| {
            let runs: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..replicates)
                .into_par_iter()
                .map(|r| {
                    let cfg = GaussianSimConfig { sigma, seed: replicate_seed(base.seed, r).0, ..base.clone() };
                    let data = simulate_gaussian::<f64>(&cfg)?;
                    let agg = aggregate_posterior(&data.probs);
                    let a = argmax_rule(&data.probs, &TieOrder::by_frequency(&agg))?;
                    let m = RuleMetrics::compute(&a, &data.probs, Some(&data.truth), None)?;
                    Ok((mae(&data.probs, &data.truth)?, m.bias_aggregate, m.bias_truth.unwrap_or_default()))
                })
                .collect::<Result<_>>()?;
            let maes: Vec<f64> = runs.iter().map(|r| r.0).collect();
            let agg: Vec<Vec<f64>> = runs.iter().map(|r| r.1.clone()).collect();
            let truth: Vec<Vec<f64>> = runs.iter().map(|r| r.2.clone()).collect();
            Ok(InformationPoint {
                sigma,
                mae: Stat::of(&maes),
                bias_aggregate: per_class_stats(&agg, base.k),
                bias_truth: per_class_stats(&truth, base.k),
            })
        })
        .collect()
}

/// Argmax bias on the plurality class of the worst-case construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCasePoint {
    pub c: f64,
    pub k: usize,
    pub mae: Stat,
    pub bias_z: Stat,
    pub expected_mae: f64,
}

/// Worst-case datasets for every `c`, labeled by argmax with ties to class 0.
pub fn worst_case_curve(cs: &[f64], k: usize, n: usize, replicates: usize, seed: u64) -> Result<Vec<WorstCasePoint>> {
    if replicates == 0 {
        return Err(Error::InvalidParameter("replicates must be positive".into()));
    }
    cs.iter()
        .map(|&c| {
            let base = WorstCaseConfig { k, c, n, seed };
            let runs: Vec<(f64, f64)> = (0..replicates)
                .into_par_iter()
                .map(|r| {
                    let data = simulate_worst_case::<f64>(&WorstCaseConfig { seed: replicate_seed(seed, r).0, ..base.clone() })?;
                    let a = argmax_rule(&data.probs, &TieOrder::identity(k))?;
                    let m = RuleMetrics::compute(&a, &data.probs, None, None)?;
                    Ok((mae(&data.probs, &data.truth)?, m.bias_aggregate[0]))
                })
                .collect::<Result<_>>()?;
            Ok(WorstCasePoint {
                c,
                k,
                mae: Stat::of(&runs.iter().map(|r| r.0).collect::<Vec<_>>()),
                bias_z: Stat::of(&runs.iter().map(|r| r.1).collect::<Vec<_>>()),
                expected_mae: base.expected_mae(),
            })
        })
        .collect()
}
