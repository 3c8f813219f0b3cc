//! Scalar abstraction shared by the tensor, packing and metrics code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// Floating point element type of feature tensors: `f32` or `f64`.
pub trait FeatureScalar:
    Float + FromPrimitive + ToPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless widening used for accumulation.
    fn to_f64_exact(self) -> f64;
    /// Round-to-nearest narrowing from the accumulator type.
    fn from_f64_rounded(v: f64) -> Self;
}

impl FeatureScalar for f32 {
    #[inline]
    fn to_f64_exact(self) -> f64 {
        self as f64
    }
    #[inline]
    fn from_f64_rounded(v: f64) -> Self {
        v as f32
    }
}

impl FeatureScalar for f64 {
    #[inline]
    fn to_f64_exact(self) -> f64 {
        self
    }
    #[inline]
    fn from_f64_rounded(v: f64) -> Self {
        v
    }
}
