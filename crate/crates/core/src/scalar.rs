use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point type the dynamics are computed in.
///
/// The tolerances are per-precision: the f64 values are the ones every
/// experiment and test in this workspace is calibrated against, the f32
/// values are loosened to roughly the same number of ulps.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Maximum |sum - 1| accepted by [`SimplexPoint`](crate::SimplexPoint) without renormalizing.
    fn simplex_tolerance() -> Self;
    /// Sum deviations below this are corrected by dividing by the sum; larger ones are rejected.
    fn renormalize_window() -> Self;
    /// Threshold under which a mean fitness is treated as zero.
    fn near_zero_mean() -> Self;
    /// Absolute tolerance under which sampled ESS margins are reported as 0.
    fn margin_tolerance() -> Self;

    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn simplex_tolerance() -> Self {
        1e-12
    }
    fn renormalize_window() -> Self {
        1e-9
    }
    fn near_zero_mean() -> Self {
        1e-9
    }
    fn margin_tolerance() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn simplex_tolerance() -> Self {
        1e-6
    }
    fn renormalize_window() -> Self {
        1e-4
    }
    fn near_zero_mean() -> Self {
        1e-5
    }
    fn margin_tolerance() -> Self {
        1e-6
    }
}

/// Dot product of two equal-length slices.
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&p, &q)| p * q).sum()
}
