use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used by the probability toolkit.
///
/// The two tolerances control how [`crate::FiniteDist`] treats weight sums:
/// deviations up to `SUM_TOL` are accepted as is, deviations up to
/// `RENORM_TOL` are renormalized away, anything larger is rejected.
pub trait Real: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static {
    const SUM_TOL: f64;
    const RENORM_TOL: f64;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const SUM_TOL: f64 = 1e-12;
    const RENORM_TOL: f64 = 1e-9;
}

impl Real for f32 {
    const SUM_TOL: f64 = 1e-6;
    const RENORM_TOL: f64 = 1e-4;
}

/// `p * ln(p / q)` with `0 * ln(0 / q) = 0` and `p * ln(p / 0) = +inf` for `p > 0`.
#[inline]
pub fn plogpq<T: Real>(p: T, q: T) -> T {
    if p <= T::zero() {
        T::zero()
    } else if q <= T::zero() {
        T::infinity()
    } else {
        p * (p / q).ln()
    }
}
