use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense class index in `0..K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClassIndex(pub usize);

impl ClassIndex {
    #[inline]
    pub fn get(self) -> usize {
        self.0
    }
}

impl fmt::Display for ClassIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A single row's decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Class(ClassIndex),
    /// Abstention; only threshold rules produce it.
    Uncoded,
}

impl Label {
    #[inline]
    pub fn class(self) -> Option<usize> {
        match self {
            Label::Class(c) => Some(c.0),
            Label::Uncoded => None,
        }
    }
}

impl From<usize> for Label {
    fn from(y: usize) -> Self {
        Label::Class(ClassIndex(y))
    }
}

/// Labels for every row of a probability matrix plus the rule that made them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelAssignment {
    labels: Vec<Label>,
    n_classes: usize,
    pub rule_id: String,
    pub seed: Option<u64>,
}

impl LabelAssignment {
    pub fn new(labels: Vec<Label>, n_classes: usize, rule_id: impl Into<String>) -> Result<Self> {
        for l in &labels {
            if let Label::Class(c) = l {
                if c.0 >= n_classes {
                    return Err(Error::ClassOutOfRange { index: c.0, n_classes });
                }
            }
        }
        Ok(Self { labels, n_classes, rule_id: rule_id.into(), seed: None })
    }

    pub fn from_classes(classes: Vec<usize>, n_classes: usize, rule_id: impl Into<String>) -> Result<Self> {
        Self::new(classes.into_iter().map(Label::from).collect(), n_classes, rule_id)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_uncoded(&self) -> usize {
        self.labels.iter().filter(|l| matches!(l, Label::Uncoded)).count()
    }

    /// Plain class indices; fails if any row is uncoded.
    pub fn classes(&self) -> Result<Vec<usize>> {
        self.labels.iter().map(|l| l.class().ok_or(Error::UncodedPresent)).collect()
    }

    /// Per-class label counts; fails if any row is uncoded.
    pub fn counts(&self) -> Result<Vec<usize>> {
        let mut counts = vec![0usize; self.n_classes];
        for l in &self.labels {
            counts[l.class().ok_or(Error::UncodedPresent)?] += 1;
        }
        Ok(counts)
    }

    /// The labeled rows only, with their original row indices.
    pub fn labeled_subset(&self) -> (LabelAssignment, Vec<usize>) {
        let (idx, labels): (Vec<usize>, Vec<Label>) = self
            .labels
            .iter()
            .enumerate()
            .filter(|(_, l)| !matches!(l, Label::Uncoded))
            .map(|(i, l)| (i, *l))
            .unzip();
        let sub = LabelAssignment {
            labels,
            n_classes: self.n_classes,
            rule_id: self.rule_id.clone(),
            seed: self.seed,
        };
        (sub, idx)
    }

    /// Scatter `parts` (each covering the listed rows) back into one assignment of length `n`.
    pub fn scatter(
        n: usize,
        n_classes: usize,
        rule_id: impl Into<String>,
        parts: impl IntoIterator<Item = (Vec<usize>, LabelAssignment)>,
    ) -> Result<Self> {
        let mut labels = vec![Label::Uncoded; n];
        let mut filled = 0;
        for (rows, part) in parts {
            if rows.len() != part.len() {
                return Err(Error::LengthMismatch { left: rows.len(), right: part.len() });
            }
            for (&i, &l) in rows.iter().zip(part.labels()) {
                labels[i] = l;
                filled += 1;
            }
        }
        if filled != n {
            return Err(Error::LengthMismatch { left: filled, right: n });
        }
        Self::new(labels, n_classes, rule_id)
    }
}

/// True class of every row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    labels: Vec<usize>,
    n_classes: usize,
}

impl GroundTruth {
    pub fn new(labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
            return Err(Error::ClassOutOfRange { index: bad, n_classes });
        }
        Ok(Self { labels, n_classes })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self { labels: idx.iter().map(|&i| self.labels[i]).collect(), n_classes: self.n_classes }
    }
}

/// Per-row group key (e.g. county).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupKeys {
    keys: Vec<String>,
}

impl GroupKeys {
    pub fn new(keys: Vec<String>) -> Self {
        Self { keys }
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Row indices per group, groups in sorted key order, rows in original order.
    pub fn partition(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut out: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, k) in self.keys.iter().enumerate() {
            out.entry(k.as_str()).or_default().push(i);
        }
        out
    }
}
