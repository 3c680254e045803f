//! Scalar abstraction shared by the generic parts of the crate.

use nalgebra as na;
use num_traits as nt;

/// Real floating point type usable in the dual-field algebra (`f32` or `f64`).
pub trait Real: Copy + nt::FloatConst + nt::FromPrimitive + nt::ToPrimitive + na::RealField {
    /// Converts from an `f64` literal.
    fn lit(x: f64) -> Self {
        <Self as nt::FromPrimitive>::from_f64(x).expect("representable literal")
    }

    fn as_f64(self) -> f64 {
        nt::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Machine epsilon.
    fn eps() -> Self;
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}
