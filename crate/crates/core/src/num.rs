//! Scalar abstraction for stimulus synthesis.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type usable as an audio sample or data value.
///
/// Implemented for `f32` and `f64`.
pub trait Sample:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; the literals used by synthesis are all
    /// representable in `f32`.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 converts to every Sample type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Sample for f32 {}
impl Sample for f64 {}
