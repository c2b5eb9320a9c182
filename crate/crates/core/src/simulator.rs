//! Synthetic datasets with exact Bayes posteriors.
//!
//! The Gaussian model draws `y` from a prior and a feature vector `x` in
//! `R^K` with `x_k ~ Normal(1[k = y], sigma^2)`. Its posterior is
//! `prior(y) exp(x_y / sigma^2)` normalized over classes, since every other
//! factor of the likelihood is shared by all classes.
//!
//! The worst-case model mixes one-hot rows on a plurality class `z = 0`
//! (mass `1 - c`) with uniform rows whose truth is uniform (mass `c`). It is
//! calibrated, its MAE is `c (K - 1) / K`, and argmax with ties going to `z`
//! has exactly that much bias on `z`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::GroundTruth;
use crate::matrix::ProbabilityMatrix;
use crate::rules::{RngSeed, RowStreams};
use crate::scalar::Scalar;

/// `{1/2, 1/4, ..., 1/2^(K-1), 1/2^(K-1)}`: halving, with the last two equal.
pub fn halving_prior(k: usize) -> Vec<f64> {
    let mut p: Vec<f64> = (1..k).map(|i| 0.5f64.powi(i as i32)).collect();
    p.push(0.5f64.powi(k as i32 - 1));
    p
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSimConfig {
    pub k: usize,
    pub prior: Vec<f64>,
    pub sigma: f64,
    pub n: usize,
    pub seed: u64,
}

impl Default for GaussianSimConfig {
    fn default() -> Self {
        Self { k: 6, prior: halving_prior(6), sigma: 0.5, n: 5000, seed: 0 }
    }
}

impl GaussianSimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::TooFewClasses(self.k));
        }
        if self.prior.len() != self.k {
            return Err(Error::ClassMismatch { expected: self.k, got: self.prior.len() });
        }
        if self.prior.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParameter("prior entries must be nonnegative".into()));
        }
        let s: f64 = self.prior.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("prior sums to {s}")));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma {} must be positive", self.sigma)));
        }
        if self.n == 0 {
            return Err(Error::Empty);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseConfig {
    pub k: usize,
    /// Mass of rows with the uniform posterior.
    pub c: f64,
    pub n: usize,
    pub seed: u64,
}

impl WorstCaseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::TooFewClasses(self.k));
        }
        if !(0.0..=1.0).contains(&self.c) {
            return Err(Error::InvalidParameter(format!("c = {} not in [0, 1]", self.c)));
        }
        if self.n == 0 {
            return Err(Error::Empty);
        }
        Ok(())
    }

    /// Class distribution the construction induces: `1 - c + c/K` on class 0
    /// and `c/K` elsewhere.
    pub fn induced_prior(&self) -> Vec<f64> {
        let u = self.c / self.k as f64;
        let mut p = vec![u; self.k];
        p[0] += 1.0 - self.c;
        p
    }

    pub fn expected_mae(&self) -> f64 {
        self.c * (self.k as f64 - 1.0) / self.k as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SimConfig {
    Gaussian(GaussianSimConfig),
    WorstCase(WorstCaseConfig),
}

/// Simulated rows with their exact posteriors and true labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset<T> {
    pub probs: ProbabilityMatrix<T>,
    pub truth: GroundTruth,
    /// Row-major N x K features; Gaussian model only.
    pub features: Option<Vec<T>>,
    /// The distribution the true labels were drawn from.
    pub prior: Vec<f64>,
    pub config: SimConfig,
}

pub fn class_names(k: usize) -> Vec<String> {
    (0..k).map(|y| format!("c{y}")).collect()
}

fn draw_class<R: Rng>(rng: &mut R, prior: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (y, &p) in prior.iter().enumerate() {
        cum += p;
        if u < cum {
            return y;
        }
    }
    prior.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

pub fn simulate_gaussian<T: Scalar>(cfg: &GaussianSimConfig) -> Result<SyntheticDataset<T>> {
    cfg.validate()?;
    let (k, n) = (cfg.k, cfg.n);
    let streams = RowStreams::new(RngSeed(cfg.seed), "gaussian-sim");
    let inv_var = T::of(1.0 / (cfg.sigma * cfg.sigma));
    let sigma = T::of(cfg.sigma);
    let log_prior: Vec<T> = cfg.prior.iter().map(|&p| T::of(p.ln())).collect();
    let mut features = Vec::with_capacity(n * k);
    let mut probs = Vec::with_capacity(n * k);
    let mut truth = Vec::with_capacity(n);
    let mut logits = vec![T::zero(); k];
    for i in 0..n {
        let mut rng = streams.row(i as u64);
        let y = draw_class(&mut rng, &cfg.prior);
        truth.push(y);
        let start = features.len();
        for c in 0..k {
            let mean = if c == y { T::one() } else { T::zero() };
            features.push(mean + sigma * T::standard_normal(&mut rng));
        }
        let x = &features[start..];
        for c in 0..k {
            logits[c] = log_prior[c] + x[c] * inv_var;
        }
        let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
        let mut total = T::zero();
        for l in logits.iter_mut() {
            *l = (*l - max).exp();
            total = total + *l;
        }
        probs.extend(logits.iter().map(|&e| e / total));
    }
    Ok(SyntheticDataset {
        probs: ProbabilityMatrix::from_flat(k, probs)?.with_class_names(class_names(k))?,
        truth: GroundTruth::new(truth, k)?,
        features: Some(features),
        prior: cfg.prior.clone(),
        config: SimConfig::Gaussian(cfg.clone()),
    })
}

pub fn simulate_worst_case<T: Scalar>(cfg: &WorstCaseConfig) -> Result<SyntheticDataset<T>> {
    cfg.validate()?;
    let (k, n) = (cfg.k, cfg.n);
    let streams = RowStreams::new(RngSeed(cfg.seed), "worst-case-sim");
    let uniform = T::one() / T::of(k as f64);
    let mut probs = Vec::with_capacity(n * k);
    let mut truth = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = streams.row(i as u64);
        let u: f64 = rng.random();
        if u < cfg.c {
            probs.extend(std::iter::repeat_n(uniform, k));
            truth.push(rng.random_range(0..k));
        } else {
            probs.push(T::one());
            probs.extend(std::iter::repeat_n(T::zero(), k - 1));
            truth.push(0);
        }
    }
    Ok(SyntheticDataset {
        probs: ProbabilityMatrix::from_flat(k, probs)?.with_class_names(class_names(k))?,
        truth: GroundTruth::new(truth, k)?,
        features: None,
        prior: cfg.induced_prior(),
        config: SimConfig::WorstCase(cfg.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{aggregate_posterior, bias_vector, mae};
    use crate::rules::{argmax_rule, TieOrder};

    #[test]
    fn halving_prior_default() {
        assert_eq!(halving_prior(6), vec![0.5, 0.25, 0.125, 0.0625, 0.03125, 0.03125]);
        assert_eq!(halving_prior(2), vec![0.5, 0.5]);
    }

    #[test]
    fn uninformative_features() {
        // Logits move by x / sigma^2 ~ Normal(0, 1 / sigma^2), so rows sit
        // O(1 / sigma) from the prior; 5 / sigma covers the sample maximum.
        let cfg = GaussianSimConfig { sigma: 1e6, n: 2000, seed: 1, ..Default::default() };
        let d = simulate_gaussian::<f64>(&cfg).unwrap();
        for row in d.probs.rows() {
            for (q, p) in row.iter().zip(&cfg.prior) {
                assert!((q - p).abs() < 5e-6);
            }
        }
    }

    #[test]
    fn perfect_information() {
        let cfg = GaussianSimConfig { sigma: 1e-3, n: 5000, seed: 2, ..Default::default() };
        let d = simulate_gaussian::<f64>(&cfg).unwrap();
        let a = argmax_rule(&d.probs, &TieOrder::identity(6)).unwrap();
        let hits = a.classes().unwrap().iter().zip(d.truth.labels()).filter(|(a, b)| a == b).count();
        assert!(hits as f64 / 5000.0 > 0.999);
    }

    #[test]
    fn deterministic_and_row_local() {
        let cfg = GaussianSimConfig { n: 300, seed: 9, ..Default::default() };
        let a = simulate_gaussian::<f64>(&cfg).unwrap();
        assert_eq!(a, simulate_gaussian::<f64>(&cfg).unwrap());
        let shorter = simulate_gaussian::<f64>(&GaussianSimConfig { n: 100, ..cfg }).unwrap();
        assert_eq!(shorter.truth.labels(), &a.truth.labels()[..100]);
    }

    #[test]
    fn f32_simulation() {
        let cfg = GaussianSimConfig { sigma: 0.1, n: 500, seed: 4, ..Default::default() };
        let d = simulate_gaussian::<f32>(&cfg).unwrap();
        assert_eq!(d.probs.n_rows(), 500);
        assert!(mae(&d.probs, &d.truth).unwrap() < 0.01);
    }

    #[test]
    fn worst_case_perfect_classifier() {
        let cfg = WorstCaseConfig { k: 4, c: 0.0, n: 500, seed: 0 };
        let d = simulate_worst_case::<f64>(&cfg).unwrap();
        assert_eq!(mae(&d.probs, &d.truth).unwrap(), 0.0);
        let a = argmax_rule(&d.probs, &TieOrder::identity(4)).unwrap();
        assert!(bias_vector(&a, &aggregate_posterior(&d.probs)).unwrap().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn worst_case_bias_equals_mae() {
        for (c, expect) in [(1.0, 0.5), (0.5, 0.25)] {
            let cfg = WorstCaseConfig { k: 2, c, n: 10_000, seed: 5 };
            let d = simulate_worst_case::<f64>(&cfg).unwrap();
            let m = mae(&d.probs, &d.truth).unwrap();
            let a = argmax_rule(&d.probs, &TieOrder::identity(2)).unwrap();
            let b = bias_vector(&a, &aggregate_posterior(&d.probs)).unwrap()[0];
            assert!((m - expect).abs() <= 0.02, "mae {m}");
            assert!((b - expect).abs() <= 0.02, "bias {b}");
        }
    }

    #[test]
    fn worst_case_argmax_picks_plurality() {
        let cfg = WorstCaseConfig { k: 2, c: 0.5, n: 10_000, seed: 8 };
        let d = simulate_worst_case::<f64>(&cfg).unwrap();
        let a = argmax_rule(&d.probs, &TieOrder::identity(2)).unwrap();
        let marg = crate::metrics::marginal_distribution::<f64>(&a).unwrap();
        assert!((marg[0] - 1.0).abs() <= 0.02);
    }

    #[test]
    fn config_validation() {
        assert!(simulate_gaussian::<f64>(&GaussianSimConfig { sigma: 0.0, ..Default::default() }).is_err());
        assert!(simulate_gaussian::<f64>(&GaussianSimConfig { prior: vec![0.5; 6], ..Default::default() }).is_err());
        assert!(simulate_worst_case::<f64>(&WorstCaseConfig { k: 2, c: 1.5, n: 10, seed: 0 }).is_err());
    }
}
