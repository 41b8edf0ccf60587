//! Scalar abstraction: the one trait every numerical routine is generic over.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar (`f32` or `f64`).
///
/// `RealField` supplies field arithmetic and elementary functions for both
/// the scalar and `Complex<Self>` matrices; the num-traits bounds supply
/// portable conversion to and from literal constants.
pub trait RealScalar: RealField + FromPrimitive + ToPrimitive + Copy {
    /// `true` when the value is neither infinite nor NaN.
    fn finite(self) -> bool;

    /// Positive infinity, used as the Kullback-Leibler sentinel for
    /// support violations.
    fn pos_infinity() -> Self;
}

impl RealScalar for f32 {
    fn finite(self) -> bool {
        self.is_finite()
    }

    fn pos_infinity() -> Self {
        f32::INFINITY
    }
}

impl RealScalar for f64 {
    fn finite(self) -> bool {
        self.is_finite()
    }

    fn pos_infinity() -> Self {
        f64::INFINITY
    }
}

/// Converts an `f64` constant into the working scalar. Named so call sites
/// read as the constant they inject: `real(0.5)`. Panics only if the target
/// type cannot represent finite `f64` values, which holds for neither
/// supported scalar.
pub fn real<T: RealScalar>(v: f64) -> T {
    T::from_f64(v).expect("finite f64 constant converts to scalar")
}
