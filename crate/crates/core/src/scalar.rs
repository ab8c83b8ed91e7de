//! Floating-point abstraction shared by the solvers.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar type the solvers are generic over (`f32` or `f64`).
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Sum
    + Default
    + Send
    + Sync
    + 'static
{
    /// Smallest magnitude stored in a distribution table before it is flushed to zero.
    fn flush_threshold() -> Self;
}

impl Scalar for f32 {
    fn flush_threshold() -> Self {
        f32::MIN_POSITIVE
    }
}

impl Scalar for f64 {
    fn flush_threshold() -> Self {
        1e-300
    }
}

/// Converts an `f64` literal into `T`. Infallible for the float types.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("finite literal")
}

#[inline]
pub fn from_usize<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("integer fits scalar")
}

#[inline]
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
