use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// Floating-point scalar the core geometry is generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumCast + Sum + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Lossless-enough conversion from `f64` for tolerances and literals.
    fn from_f64_lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }

    /// Conversion to `f64` for reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
