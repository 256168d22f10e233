//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
///
/// Only `num_traits::Float` contributes methods; nalgebra's `Scalar` is
/// required for dense storage but `RealField` is deliberately not, so that
/// `x.sqrt()` and friends never resolve ambiguously.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + nalgebra::Scalar
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Display
    + LowerExp
    + Send
    + Sync
    + serde::Serialize
    + 'static
{
    /// Machine epsilon of the type.
    const EPS: Self;

    /// Converts an `f64` literal. Never fails for finite input.
    fn lit(x: f64) -> Self;

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn count(n: usize) -> Self {
        Self::lit(n as f64)
    }
}

impl Real for f32 {
    const EPS: Self = f32::EPSILON;
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
}

impl Real for f64 {
    const EPS: Self = f64::EPSILON;
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
}

/// Planar point.
pub type Point<T> = [T; 2];

#[inline]
pub fn dot2<T: Real>(a: Point<T>, b: Point<T>) -> T {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross2<T: Real>(a: Point<T>, b: Point<T>) -> T {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn sub2<T: Real>(a: Point<T>, b: Point<T>) -> Point<T> {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn norm2<T: Real>(a: Point<T>) -> T {
    a[0].hypot(a[1])
}
