//! Floating-point scalar abstraction for the math kernels.

use num_traits::{Float, FromPrimitive};

/// Scalar type the generic kernels are written against: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + std::fmt::Debug + std::fmt::Display + 'static {
    /// Shorthand for converting an `f64` literal into `Self`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}
