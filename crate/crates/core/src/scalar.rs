//! Scalar abstractions.
//!
//! [`Scalar`] is the exact-arithmetic contract: ring/field operations, sign,
//! ordering and conversion. It is satisfied by `f32`, `f64` and by
//! `num_rational` ratios, so term-list algorithms (exact decomposition,
//! functionals, Rodrigues expansion) run unchanged over rationals.
//!
//! [`Real`] adds the transcendental functions needed to evaluate signals.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};

pub trait Scalar:
    Clone + PartialOrd + Debug + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Lossy conversion used for diagnostics and error payloads.
    fn approx_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `true` when the value equals a non-positive integer (a pole of Γ).
    fn is_nonpositive_integer(&self) -> bool {
        let v = self.approx_f64();
        v <= 0.0 && v.fract() == 0.0
    }
}

impl<T> Scalar for T where
    T: Clone
        + PartialOrd
        + Debug
        + Num
        + Signed
        + FromPrimitive
        + ToPrimitive
        + Send
        + Sync
        + 'static
{
}

pub trait Real: Scalar + Float + FloatConst + Copy + Default + Display + LowerExp + Sum {}

impl<T> Real for T where T: Scalar + Float + FloatConst + Copy + Default + Display + LowerExp + Sum {}

/// Converts an `f64` literal into `T`. Panics only if `T` cannot represent a finite `f64`.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("finite literal representable in scalar type")
}

/// Converts a small integer into `T`.
#[inline]
pub fn int<T: Scalar>(n: i64) -> T {
    T::from_i64(n).expect("integer representable in scalar type")
}
