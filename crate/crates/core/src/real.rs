//! Scalar abstraction: the whole library is generic over a floating-point
//! `Real` so that instances can be solved in `f64` (the default everywhere)
//! or `f32`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

/// Floating-point scalar used for impact amounts, weights and lengths.
pub trait Real:
    num_traits::Float
    + num_traits::NumCast
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` constant.
    #[inline]
    fn of(v: f64) -> Self {
        num_traits::NumCast::from(v).expect("constant not representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("scalar not representable as f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `a >= b` up to a relative slack of `rel` (on the magnitude of `b`).
///
/// All threshold comparisons in the solvers go through this helper so that
/// capped sums that accumulate rounding do not flip feasibility decisions.
#[inline]
pub fn ge_rel<S: Real>(a: S, b: S, rel: S) -> bool {
    a >= b - b.abs() * rel
}

/// Total order on scalars for heaps and sorted sets. Lengths and costs in
/// this crate are sums of non-negative finite weights, so NaN never occurs.
#[inline]
pub fn cmp_scalar<S: Real>(a: &S, b: &S) -> std::cmp::Ordering {
    a.partial_cmp(b).expect("NaN cost in comparison")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ge_rel_accepts_values_just_below_threshold() {
        assert!(ge_rel(9.0_f64 - 1e-12, 9.0, 1e-9));
        assert!(!ge_rel(8.99_f64, 9.0, 1e-9));
        assert!(ge_rel(9.1_f64, 9.0, 1e-9));
    }

    #[test]
    fn real_roundtrips_constants() {
        assert_eq!(f64::of(0.5), 0.5);
        assert_eq!(f32::of(0.5), 0.5_f32);
        assert_eq!(2.5_f64.as_f64(), 2.5);
    }
}
