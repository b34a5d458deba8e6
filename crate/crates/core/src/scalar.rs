//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::Debug;

use nalgebra::RealField;
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the kernel, optimizer and voting code are generic over.
///
/// Implemented for `f32` and `f64`. The kernel needs `sin`, so exact rational
/// scalars are not supported.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + FloatConst + Debug + Send + Sync + 'static {
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Converts a count into the scalar type.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the scalar type.
    fn machine_eps() -> Self;
}

impl Real for f32 {
    fn machine_eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn machine_eps() -> Self {
        f64::EPSILON
    }
}
