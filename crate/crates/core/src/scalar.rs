//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::ToPrimitive;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Real floating-point scalar: `f32` or `f64`.
///
/// Everything numeric in the crate is written against this trait. The
/// purely algebraic routines (total causal effects) use a weaker ring bound
/// so they also run on exact rationals.
pub trait Real: RealField + Copy + ToPrimitive + Debug + Display + Send + Sync + 'static {
    /// Machine epsilon for the type.
    const EPS: Self;

    /// Draw one standard normal variate.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossy conversion from `f64` (rounds for `f32`).
    fn of(x: f64) -> Self {
        nalgebra::convert(x)
    }

    /// Lossless widening to `f64`.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const EPS: Self = f64::EPSILON;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Real for f32 {
    const EPS: Self = f32::EPSILON;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

/// Shorthand for [`Real::of`].
#[inline]
pub fn c<T: Real>(x: f64) -> T {
    T::of(x)
}
