//! Floating-point scalar abstraction shared by the spectral and paraproduct layers.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive};
use rustfft::FftNum;

/// Real scalar usable on the torus: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + FftNum + Debug + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant, panicking only on non-representable input.
    fn c(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("constant representable in scalar type")
    }

    fn to_f64(self) -> f64;

    /// Machine epsilon as `f64`, used for tolerance scaling.
    fn eps() -> f64;
}

impl Scalar for f64 {
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    fn eps() -> f64 {
        f64::EPSILON
    }
}

impl Scalar for f32 {
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn eps() -> f64 {
        f32::EPSILON as f64
    }
}
