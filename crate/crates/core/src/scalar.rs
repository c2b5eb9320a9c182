use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating point type the library is generic over: `f32` or `f64`.
///
/// The tolerances scale with the precision of the type. For `f64` a row must
/// sum to one within `1e-9` after ingestion; ingestion itself accepts rows
/// within `1e-6` of one and renormalizes them.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Sum + Default + Send + Sync + 'static
{
    /// Maximum deviation of a stored row sum from one.
    const SUM_TOLERANCE: f64;
    /// Maximum deviation of an ingested row sum from one before it is rejected.
    const INGEST_TOLERANCE: f64;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to every Scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f64 {
    const SUM_TOLERANCE: f64 = 1e-9;
    const INGEST_TOLERANCE: f64 = 1e-6;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Scalar for f32 {
    const SUM_TOLERANCE: f64 = 1e-5;
    const INGEST_TOLERANCE: f64 = 1e-4;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}
