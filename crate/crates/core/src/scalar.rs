//! Scalar abstraction for the geometric parts of the toolkit.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used by planes, surfaces, normal integration and fitting.
///
/// Implemented for `f32` and `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal. Never fails for the implemented types.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal fits every Real type")
    }

    fn from_usize_lossy(x: usize) -> Self {
        Self::from_usize(x).expect("usize is representable")
    }

    fn from_i64_lossy(x: i64) -> Self {
        Self::from_i64(x).expect("i64 is representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Rounds half away from zero and converts to `i32`, saturating.
///
/// `Float::round` already rounds ties away from zero; this only adds the
/// saturating integer conversion. Returns `None` for non-finite input.
pub fn round_to_i32<T: Real>(x: T) -> Option<i32> {
    if !x.is_finite() {
        return None;
    }
    let r = x.round();
    let clamped = r
        .max(T::lit(i32::MIN as f64))
        .min(T::lit(i32::MAX as f64));
    clamped.to_i32()
}
