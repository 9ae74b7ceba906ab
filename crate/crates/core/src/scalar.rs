//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type usable for log-probabilities, feature values and metrics.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("scalar literal out of range")
    }

    /// Converts a count into this scalar type.
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count out of range")
    }

    /// Sentinel standing in for `ln 0`. Finite so that averaging stays total.
    fn log_zero() -> Self {
        Self::lit(LOG_ZERO)
    }

    /// Natural log with zero (and anything below the sentinel) mapped to [`Scalar::log_zero`].
    fn safe_ln(self) -> Self {
        if self <= Self::zero() {
            return Self::log_zero();
        }
        let ln = self.ln();
        if ln < Self::log_zero() {
            Self::log_zero()
        } else {
            ln
        }
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Log-domain value used for zero probability.
pub const LOG_ZERO: f64 = -1.0e30;

/// Descending order over scalars; incomparable values (NaN) compare equal.
pub(crate) fn cmp_desc<S: Scalar>(a: S, b: S) -> std::cmp::Ordering {
    b.partial_cmp(&a).unwrap_or(std::cmp::Ordering::Equal)
}
