//! Scalar abstraction for the numeric core.
//!
//! The dense/sparse linear algebra in [`crate::linalg`] is generic over any
//! IEEE float; the rest of the pipeline pins `f64` via the [`crate::Matrix`]
//! alias, which is the precision every documented tolerance assumes.

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating-point scalar usable by the matrix kernels.
pub trait Scalar:
    Float + FromPrimitive + NumCast + std::fmt::Debug + std::fmt::Display + Default + Send + Sync + 'static
{
    /// Lossless-enough conversion from `f64` used when materializing
    /// constants and random draws (draws are always generated in `f64`).
    fn from_f64_lossy(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("finite f64 converts to any Scalar")
    }

    /// Widening conversion used by accumulating reductions and diagnostics.
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        let x = f32::from_f64_lossy(0.25);
        assert_eq!(x, 0.25f32);
        assert_eq!(x.to_f64_lossy(), 0.25);
        let y = f64::from_f64_lossy(1.0e-12);
        assert_eq!(y, 1.0e-12);
    }
}
