use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// N rows of K-class probability vectors, stored row-major.
///
/// Rows always sum to one within [`Scalar::SUM_TOLERANCE`]. Construction
/// accepts rows whose sum is within [`Scalar::INGEST_TOLERANCE`] of one and
/// rescales them; anything further out is rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix<T> {
    n_rows: usize,
    n_classes: usize,
    probs: Vec<T>,
    class_names: Option<Vec<String>>,
    renormalized: usize,
}

impl<T: Scalar> ProbabilityMatrix<T> {
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let n_classes = rows.first().map(|r| r.as_ref().len()).ok_or(Error::Empty)?;
        let mut flat = Vec::with_capacity(rows.len() * n_classes);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_classes {
                return Err(Error::RowWidth { row: i, expected: n_classes, got: row.len() });
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(n_classes, flat)
    }

    pub fn from_flat(n_classes: usize, mut probs: Vec<T>) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::TooFewClasses(n_classes));
        }
        if probs.is_empty() {
            return Err(Error::Empty);
        }
        if !probs.len().is_multiple_of(n_classes) {
            return Err(Error::RowWidth {
                row: probs.len() / n_classes,
                expected: n_classes,
                got: probs.len() % n_classes,
            });
        }
        let n_rows = probs.len() / n_classes;
        let mut renormalized = 0;
        for (i, row) in probs.chunks_mut(n_classes).enumerate() {
            for (y, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < T::zero() || v > T::one() {
                    return Err(Error::BadProbability { row: i, class: y, value: v.as_f64() });
                }
            }
            let sum: T = row.iter().copied().sum();
            let dev = (sum.as_f64() - 1.0).abs();
            if dev > T::INGEST_TOLERANCE {
                return Err(Error::RowSum { row: i, sum: sum.as_f64() });
            }
            if dev > T::SUM_TOLERANCE {
                renormalized += 1;
            }
            if sum != T::one() {
                row.iter_mut().for_each(|v| *v = *v / sum);
            }
        }
        Ok(Self { n_rows, n_classes, probs, class_names: None, renormalized })
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_classes {
            return Err(Error::ClassMismatch { expected: self.n_classes, got: names.len() });
        }
        self.class_names = Some(names);
        Ok(self)
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.probs[i * self.n_classes..(i + 1) * self.n_classes]
    }

    #[inline]
    pub fn get(&self, i: usize, y: usize) -> T {
        self.probs[i * self.n_classes + y]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, T> {
        self.probs.chunks_exact(self.n_classes)
    }

    pub fn as_flat(&self) -> &[T] {
        &self.probs
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    /// Number of rows whose sum had to be rescaled noticeably at construction.
    pub fn renormalized_rows(&self) -> usize {
        self.renormalized
    }

    /// Copy of the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() {
            return Err(Error::Empty);
        }
        let mut flat = Vec::with_capacity(idx.len() * self.n_classes);
        for &i in idx {
            if i >= self.n_rows {
                return Err(Error::LengthMismatch { left: i, right: self.n_rows });
            }
            flat.extend_from_slice(self.row(i));
        }
        Ok(Self {
            n_rows: idx.len(),
            n_classes: self.n_classes,
            probs: flat,
            class_names: self.class_names.clone(),
            renormalized: 0,
        })
    }

    pub fn convert<U: Scalar>(&self) -> Result<ProbabilityMatrix<U>> {
        let flat = self.probs.iter().map(|v| U::of(v.as_f64())).collect();
        let m = ProbabilityMatrix::from_flat(self.n_classes, flat)?;
        match &self.class_names {
            Some(n) => m.with_class_names(n.clone()),
            None => Ok(m),
        }
    }
}
