//! Rule specifications and a single entry point for running any rule.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heuristic::{apply_labeler, fit_labeler, FitOutcome, TrainConfig};
use crate::joint::{
    conditional_match_batched, gamma_batched, match_batched, target_counts, match_to_reference,
    BatchTarget, GroupReferences, DEFAULT_BATCH_SIZE,
};
use crate::labels::{GroundTruth, GroupKeys, LabelAssignment};
use crate::matrix::ProbabilityMatrix;
use crate::metrics::aggregate_posterior;
use crate::reference::{ReferenceDistribution, ReferenceSource};
use crate::rules::{argmax_rule, thompson_rule, threshold_rule, topk_rule, RngSeed, TieOrder};
use crate::scalar::Scalar;

/// A decision rule and its parameters, written as `name[:param]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RuleSpec {
    Argmax,
    Threshold(f64),
    Thompson,
    TopK(usize),
    Match,
    MatchGroup,
    Gamma(f64),
    Heuristic,
}

impl RuleSpec {
    pub fn needs_groups(self) -> bool {
        matches!(self, RuleSpec::MatchGroup)
    }
}

impl fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleSpec::Argmax => f.write_str("argmax"),
            RuleSpec::Threshold(t) => write!(f, "threshold:{t}"),
            RuleSpec::Thompson => f.write_str("thompson"),
            RuleSpec::TopK(k) => write!(f, "topk:{k}"),
            RuleSpec::Match => f.write_str("match"),
            RuleSpec::MatchGroup => f.write_str("match:group"),
            RuleSpec::Gamma(g) => write!(f, "gamma:{g}"),
            RuleSpec::Heuristic => f.write_str("heuristic"),
        }
    }
}

fn parse_param<P: FromStr>(spec: &str, p: Option<&str>) -> Result<P> {
    p.and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::InvalidParameter(format!("rule {spec:?} needs a numeric parameter")))
}

impl FromStr for RuleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let spec = match (name, param) {
            ("argmax", None) => RuleSpec::Argmax,
            ("thompson", None) => RuleSpec::Thompson,
            ("match", None) => RuleSpec::Match,
            ("match", Some("group")) => RuleSpec::MatchGroup,
            ("heuristic", None) => RuleSpec::Heuristic,
            ("threshold", p) => {
                let t: f64 = parse_param(s, p)?;
                if !(t > 0.0 && t <= 1.0) {
                    return Err(Error::InvalidParameter(format!("threshold {t} not in (0, 1]")));
                }
                RuleSpec::Threshold(t)
            }
            ("topk", p) => RuleSpec::TopK(parse_param(s, p)?),
            ("gamma", p) => {
                let g: f64 = parse_param(s, p)?;
                if !(0.0..=1.0).contains(&g) {
                    return Err(Error::InvalidParameter(format!("gamma {g} not in [0, 1]")));
                }
                RuleSpec::Gamma(g)
            }
            _ => return Err(Error::InvalidParameter(format!("unknown rule {s:?}"))),
        };
        Ok(spec)
    }
}

impl TryFrom<String> for RuleSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RuleSpec> for String {
    fn from(r: RuleSpec) -> Self {
        r.to_string()
    }
}

/// Parses a comma-separated rule list.
pub fn parse_rules(list: &str) -> Result<Vec<RuleSpec>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

/// Where the target distribution for joint rules comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSpec {
    Aggregate,
    /// Each group's own aggregate posterior.
    AggregateByGroup,
    Truth,
    Uniform,
    Custom(Vec<f64>),
}

impl FromStr for ReferenceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "aggregate" => Ok(ReferenceSpec::Aggregate),
            "aggregate:group" => Ok(ReferenceSpec::AggregateByGroup),
            "truth" => Ok(ReferenceSpec::Truth),
            "uniform" => Ok(ReferenceSpec::Uniform),
            other => {
                let list = other
                    .strip_prefix("custom:")
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown reference {other:?}")))?;
                list.split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidReference(format!("{v:?} is not a number")))
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(ReferenceSpec::Custom)
            }
        }
    }
}

impl fmt::Display for ReferenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReferenceSpec::Aggregate => f.write_str("aggregate"),
            ReferenceSpec::AggregateByGroup => f.write_str("aggregate:group"),
            ReferenceSpec::Truth => f.write_str("truth"),
            ReferenceSpec::Uniform => f.write_str("uniform"),
            ReferenceSpec::Custom(w) => {
                let parts: Vec<String> = w.iter().map(f64::to_string).collect();
                write!(f, "custom:{}", parts.join(","))
            }
        }
    }
}

impl ReferenceSpec {
    /// The single dataset-wide distribution this spec denotes.
    pub fn resolve<T: Scalar>(
        &self,
        probs: &ProbabilityMatrix<T>,
        truth: Option<&GroundTruth>,
    ) -> Result<ReferenceDistribution<T>> {
        let r = match self {
            ReferenceSpec::Aggregate | ReferenceSpec::AggregateByGroup => aggregate_posterior(probs),
            ReferenceSpec::Truth => ReferenceDistribution::truth_marginal(
                truth.ok_or_else(|| Error::InvalidReference("truth reference needs a true_label column".into()))?,
            )?,
            ReferenceSpec::Uniform => ReferenceDistribution::uniform(probs.n_classes())?,
            ReferenceSpec::Custom(w) => {
                ReferenceDistribution::new(w.iter().map(|&v| T::of(v)).collect(), ReferenceSource::Custom)?
            }
        };
        if r.n_classes() != probs.n_classes() {
            return Err(Error::InvalidReference(format!(
                "{} weights for {} classes",
                r.n_classes(),
                probs.n_classes()
            )));
        }
        Ok(r)
    }
}

/// Everything besides the rule itself that determines its labels.
#[derive(Debug, Clone)]
pub struct RuleContext<'a> {
    pub reference: ReferenceSpec,
    pub truth: Option<&'a GroundTruth>,
    pub groups: Option<&'a GroupKeys>,
    pub seed: RngSeed,
    pub batch_size: usize,
    pub train: TrainConfig,
}

impl Default for RuleContext<'_> {
    fn default() -> Self {
        Self {
            reference: ReferenceSpec::Aggregate,
            truth: None,
            groups: None,
            seed: RngSeed(0),
            batch_size: DEFAULT_BATCH_SIZE,
            train: TrainConfig::default(),
        }
    }
}

impl RuleContext<'_> {
    fn batch_target<T: Scalar>(&self, probs: &ProbabilityMatrix<T>) -> Result<BatchTarget<T>> {
        Ok(match self.reference {
            ReferenceSpec::Aggregate => BatchTarget::PerBatchAggregate,
            _ => BatchTarget::Fixed(self.reference.resolve(probs, self.truth)?),
        })
    }

    fn group_references<T: Scalar>(&self, probs: &ProbabilityMatrix<T>, groups: &GroupKeys) -> Result<GroupReferences<T>> {
        Ok(match &self.reference {
            ReferenceSpec::Aggregate | ReferenceSpec::AggregateByGroup => GroupReferences::OwnAggregate,
            ReferenceSpec::Truth => {
                let truth = self
                    .truth
                    .ok_or_else(|| Error::InvalidReference("truth reference needs a true_label column".into()))?;
                let mut map = BTreeMap::new();
                for (g, rows) in groups.partition() {
                    map.insert(g.to_string(), ReferenceDistribution::truth_marginal(&truth.select(&rows))?);
                }
                GroupReferences::Explicit(map)
            }
            other => {
                let r = other.resolve(probs, self.truth)?;
                GroupReferences::Explicit(groups.partition().keys().map(|g| (g.to_string(), r.clone())).collect())
            }
        })
    }

    fn groups(&self) -> Result<&GroupKeys> {
        self.groups.ok_or_else(|| Error::InvalidParameter("rule needs a group column".into()))
    }
}

/// Tie order for a dataset: classes by descending dataset-wide reference weight.
pub fn default_ties<T: Scalar>(probs: &ProbabilityMatrix<T>, ctx: &RuleContext<'_>) -> Result<TieOrder> {
    Ok(TieOrder::by_frequency(&ctx.reference.resolve(probs, ctx.truth)?))
}

/// Runs one rule over the whole matrix.
pub fn apply_rule<T: Scalar>(
    probs: &ProbabilityMatrix<T>,
    rule: RuleSpec,
    ctx: &RuleContext<'_>,
    ties: &TieOrder,
) -> Result<LabelAssignment> {
    let mut out = match rule {
        RuleSpec::Argmax => argmax_rule(probs, ties)?,
        RuleSpec::Threshold(t) => threshold_rule(probs, T::of(t), ties)?,
        RuleSpec::Thompson => thompson_rule(probs, ctx.seed)?,
        RuleSpec::TopK(k) => topk_rule(probs, k, ctx.seed, ties)?,
        RuleSpec::Match if ctx.reference == ReferenceSpec::AggregateByGroup => {
            let groups = ctx.groups()?;
            conditional_match_batched(probs, groups, &GroupReferences::OwnAggregate, ctx.batch_size, ties)?
        }
        RuleSpec::Match => match_batched(probs, &ctx.batch_target(probs)?, ctx.batch_size, ties)?,
        RuleSpec::MatchGroup => {
            let groups = ctx.groups()?;
            conditional_match_batched(probs, groups, &ctx.group_references(probs, groups)?, ctx.batch_size, ties)?
        }
        RuleSpec::Gamma(g) => gamma_batched(probs, &ctx.batch_target(probs)?, g, ctx.batch_size, ties)?,
        RuleSpec::Heuristic => heuristic_pipeline(probs, ctx, ties)?,
    };
    out.rule_id = rule.to_string();
    Ok(out)
}

/// Solves matching on the leading `train.batch_size` rows and fits a labeler
/// that reproduces it.
pub fn fit_heuristic<T: Scalar>(
    probs: &ProbabilityMatrix<T>,
    ctx: &RuleContext<'_>,
    ties: &TieOrder,
) -> Result<FitOutcome<T>> {
    let first: Vec<usize> = (0..probs.n_rows().min(ctx.train.batch_size.max(1))).collect();
    let batch = probs.select_rows(&first)?;
    let reference = match ctx.batch_target(&batch)? {
        BatchTarget::PerBatchAggregate => aggregate_posterior(&batch),
        BatchTarget::Fixed(r) => r,
    };
    let counts = target_counts(&reference, batch.n_rows(), ties)?;
    let targets = match_to_reference(&batch, &counts, ties)?;
    fit_labeler(&batch, &targets, &ctx.train, ties)
}

/// Fits on the first batch, then labels every row with the fitted model.
pub fn heuristic_pipeline<T: Scalar>(
    probs: &ProbabilityMatrix<T>,
    ctx: &RuleContext<'_>,
    ties: &TieOrder,
) -> Result<LabelAssignment> {
    apply_labeler(&fit_heuristic(probs, ctx, ties)?.model, probs, ties)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_specs_round_trip() {
        for s in ["argmax", "threshold:0.8", "thompson", "topk:2", "match", "match:group", "gamma:0.95", "heuristic"] {
            assert_eq!(s.parse::<RuleSpec>().unwrap().to_string(), s);
        }
        for bad in ["", "argmax:1", "threshold", "threshold:0", "topk:x", "gamma:2", "nope"] {
            assert!(bad.parse::<RuleSpec>().is_err(), "{bad}");
        }
        assert_eq!(parse_rules("argmax, match").unwrap(), vec![RuleSpec::Argmax, RuleSpec::Match]);
        assert!(parse_rules("").unwrap().is_empty());
    }

    #[test]
    fn reference_specs() {
        assert_eq!("custom:0.5,0.3,0.2".parse::<ReferenceSpec>().unwrap(), ReferenceSpec::Custom(vec![0.5, 0.3, 0.2]));
        assert_eq!("aggregate:group".parse::<ReferenceSpec>().unwrap(), ReferenceSpec::AggregateByGroup);
        assert!("custom:a,b".parse::<ReferenceSpec>().is_err());
        let p = ProbabilityMatrix::from_rows(&[[0.6, 0.4], [0.2, 0.8]]).unwrap();
        assert!(ReferenceSpec::Custom(vec![0.2, 0.3, 0.5]).resolve(&p, None).is_err());
        assert!(ReferenceSpec::Truth.resolve(&p, None).is_err());
        assert_eq!(ReferenceSpec::Uniform.resolve(&p, None).unwrap().weights(), &[0.5, 0.5]);
    }

    #[test]
    fn rule_ids_follow_specs() {
        let p = ProbabilityMatrix::from_rows(&[[0.6, 0.4], [0.2, 0.8], [0.5, 0.5]]).unwrap();
        let ctx = RuleContext::default();
        let ties = default_ties(&p, &ctx).unwrap();
        for rule in [RuleSpec::Argmax, RuleSpec::Match, RuleSpec::Gamma(0.9), RuleSpec::Heuristic, RuleSpec::TopK(1)] {
            assert_eq!(apply_rule(&p, rule, &ctx, &ties).unwrap().rule_id, rule.to_string());
        }
        assert!(apply_rule(&p, RuleSpec::MatchGroup, &ctx, &ties).is_err());
    }

    #[test]
    fn group_matching_hits_each_group() {
        let p = ProbabilityMatrix::from_rows(&[[0.9, 0.1], [0.8, 0.2], [0.6, 0.4], [0.4, 0.6]]).unwrap();
        let g = GroupKeys::new(vec!["a".into(), "a".into(), "b".into(), "b".into()]);
        let ctx = RuleContext { reference: ReferenceSpec::Custom(vec![0.5, 0.5]), groups: Some(&g), ..Default::default() };
        let ties = TieOrder::identity(2);
        let a = apply_rule(&p, RuleSpec::MatchGroup, &ctx, &ties).unwrap();
        assert_eq!(a.classes().unwrap(), vec![0, 1, 0, 1]);
    }
}
