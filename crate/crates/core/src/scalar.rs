//! Floating point abstraction shared by the grid, operator and solver code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Real scalar the spectral machinery is generic over: `f32` or `f64`.
pub trait Real:
    FftNum + Float + FloatConst + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: FftNum + Float + FloatConst + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync
{
}
