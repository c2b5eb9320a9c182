//! Data-driven thresholding: imitate an exact joint solution with a linear
//! model so that the rest of a large dataset can be labeled row by row.
//!
//! The model is a multinomial logistic regression on the raw probability
//! vector, trained by full-batch gradient descent on mean cross-entropy.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::labels::{Label, LabelAssignment};
use crate::matrix::ProbabilityMatrix;
use crate::rules::{RngSeed, RowStreams, TieOrder};
use crate::scalar::Scalar;

/// K x K weights (row `c` scores class `c`) plus K biases.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLabeler<T> {
    n_classes: usize,
    weights: Vec<T>,
    biases: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: RngSeed,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { batch_size: 10_000, epochs: 500, learning_rate: 1.0, seed: RngSeed(0) }
    }
}

/// A fitted model and how well it reproduces its training targets.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome<T> {
    pub model: LinearLabeler<T>,
    pub training_agreement: f64,
    /// Only one class appeared among the targets.
    pub degenerate: bool,
}

impl<T: Scalar> LinearLabeler<T> {
    pub fn new(n_classes: usize, weights: Vec<T>, biases: Vec<T>) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::TooFewClasses(n_classes));
        }
        if weights.len() != n_classes * n_classes || biases.len() != n_classes {
            return Err(Error::InvalidParameter(format!(
                "expected {} weights and {n_classes} biases, got {} and {}",
                n_classes * n_classes,
                weights.len(),
                biases.len()
            )));
        }
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("labeler parameters must be finite".into()));
        }
        Ok(Self { n_classes, weights, biases })
    }

    /// Scores equal the input probabilities.
    pub fn identity(n_classes: usize) -> Self {
        let mut w = vec![T::zero(); n_classes * n_classes];
        for c in 0..n_classes {
            w[c * n_classes + c] = T::one();
        }
        Self { n_classes, weights: w, biases: vec![T::zero(); n_classes] }
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn biases(&self) -> &[T] {
        &self.biases
    }

    fn scores_into(&self, x: &[T], out: &mut [T]) {
        let k = self.n_classes;
        for (c, o) in out.iter_mut().enumerate().take(k) {
            let w = &self.weights[c * k..(c + 1) * k];
            *o = self.biases[c] + w.iter().zip(x).map(|(&a, &b)| a * b).sum::<T>();
        }
    }

    pub fn predict(&self, x: &[T], ties: &TieOrder) -> usize {
        let mut s = vec![T::zero(); self.n_classes];
        self.scores_into(x, &mut s);
        ties.argmax(&s)
    }

    /// Plain-text form: `K`, then K weight rows, then one bias row.
    pub fn to_text(&self) -> String {
        let k = self.n_classes;
        let mut s = format!("{k}\n");
        for c in 0..k {
            let row: Vec<String> = self.weights[c * k..(c + 1) * k].iter().map(|v| v.as_f64().to_string()).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        let b: Vec<String> = self.biases.iter().map(|v| v.as_f64().to_string()).collect();
        let _ = writeln!(s, "{}", b.join(" "));
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let parse_err = |line: usize, message: String| Error::Parse { line: line + 1, message };
        let (ln, first) = lines.next().ok_or_else(|| parse_err(0, "empty model file".into()))?;
        let k: usize = first.trim().parse().map_err(|e| parse_err(ln, format!("class count: {e}")))?;
        let mut parse_row = |what: &str| -> Result<Vec<T>> {
            let (ln, line) = lines.next().ok_or_else(|| parse_err(ln, format!("missing {what} row")))?;
            let vals = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map(T::of).map_err(|e| parse_err(ln, format!("{what}: {e}"))))
                .collect::<Result<Vec<T>>>()?;
            if vals.len() != k {
                return Err(parse_err(ln, format!("{what} row has {} values, expected {k}", vals.len())));
            }
            Ok(vals)
        };
        let mut weights = Vec::with_capacity(k * k);
        for _ in 0..k {
            weights.extend(parse_row("weight")?);
        }
        let biases = parse_row("bias")?;
        Self::new(k, weights, biases)
    }
}

/// Fits a labeler to reproduce `targets` on `batch`.
pub fn fit_labeler<T: Scalar>(
    batch: &ProbabilityMatrix<T>,
    targets: &LabelAssignment,
    cfg: &TrainConfig,
    ties: &TieOrder,
) -> Result<FitOutcome<T>> {
    let y = targets.classes()?;
    if y.len() != batch.n_rows() {
        return Err(Error::LengthMismatch { left: batch.n_rows(), right: y.len() });
    }
    if cfg.learning_rate.is_nan() || cfg.learning_rate <= 0.0 || cfg.epochs == 0 {
        return Err(Error::InvalidParameter("epochs and learning rate must be positive".into()));
    }
    let k = batch.n_classes();
    let n = batch.n_rows();
    let mut rng = RowStreams::new(cfg.seed, "labeler-init").row(0);
    let mut w: Vec<f64> = (0..k * k).map(|_| 0.01 * (rng.random::<f64>() - 0.5)).collect();
    let mut b = vec![0.0f64; k];
    // Gradient descent runs on standardized features; the fitted weights are
    // mapped back so the model scores raw probabilities.
    let mut mean = vec![0.0f64; k];
    let mut sd = vec![0.0f64; k];
    for row in batch.rows() {
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v.as_f64() / n as f64);
    }
    for row in batch.rows() {
        sd.iter_mut().zip(row).zip(&mean).for_each(|((s, v), m)| *s += (v.as_f64() - m).powi(2) / n as f64);
    }
    sd.iter_mut().for_each(|s| *s = if *s > 1e-24 { s.sqrt() } else { 1.0 });
    let x: Vec<f64> = batch
        .as_flat()
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_f64() - mean[i % k]) / sd[i % k])
        .collect();
    let mut gw = vec![0.0f64; k * k];
    let mut gb = vec![0.0f64; k];
    let mut p = vec![0.0f64; k];
    let step = cfg.learning_rate / n as f64;
    for _ in 0..cfg.epochs {
        gw.fill(0.0);
        gb.fill(0.0);
        for (i, &yi) in y.iter().enumerate() {
            let xi = &x[i * k..(i + 1) * k];
            for c in 0..k {
                p[c] = b[c] + w[c * k..(c + 1) * k].iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
            }
            let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for v in p.iter_mut() {
                *v = (*v - max).exp();
                z += *v;
            }
            for c in 0..k {
                let g = p[c] / z - if c == yi { 1.0 } else { 0.0 };
                gb[c] += g;
                for (gwc, &xf) in gw[c * k..(c + 1) * k].iter_mut().zip(xi) {
                    *gwc += g * xf;
                }
            }
        }
        for (wv, g) in w.iter_mut().zip(&gw) {
            *wv -= step * g;
        }
        for (bv, g) in b.iter_mut().zip(&gb) {
            *bv -= step * g;
        }
    }
    for c in 0..k {
        for j in 0..k {
            w[c * k + j] /= sd[j];
            b[c] -= w[c * k + j] * mean[j];
        }
    }
    let model = LinearLabeler::new(k, w.into_iter().map(T::of).collect(), b.into_iter().map(T::of).collect())?;
    let predicted = apply_labeler(&model, batch, ties)?.classes()?;
    let agree = predicted.iter().zip(&y).filter(|(a, b)| a == b).count();
    let mut seen = vec![false; k];
    y.iter().for_each(|&c| seen[c] = true);
    Ok(FitOutcome {
        model,
        training_agreement: agree as f64 / n as f64,
        degenerate: seen.iter().filter(|&&s| s).count() < 2,
    })
}

pub fn apply_labeler<T: Scalar>(
    model: &LinearLabeler<T>,
    probs: &ProbabilityMatrix<T>,
    ties: &TieOrder,
) -> Result<LabelAssignment> {
    if model.n_classes() != probs.n_classes() {
        return Err(Error::ClassMismatch { expected: model.n_classes(), got: probs.n_classes() });
    }
    if ties.n_classes() != probs.n_classes() {
        return Err(Error::ClassMismatch { expected: probs.n_classes(), got: ties.n_classes() });
    }
    let mut scores = vec![T::zero(); probs.n_classes()];
    let labels = probs
        .rows()
        .map(|row| {
            model.scores_into(row, &mut scores);
            Label::from(ties.argmax(&scores))
        })
        .collect();
    LabelAssignment::new(labels, probs.n_classes(), "heuristic")
}
