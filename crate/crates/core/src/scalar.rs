//! Scalar abstraction for the numeric core.
//!
//! Everything downstream of data loading (polarity scores, histogram
//! features, network parameters, baseline weights) is generic over a
//! floating-point scalar so the same code runs in `f32` or `f64`.
//! Concrete `f64` aliases live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used throughout the numeric core.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used at data-ingestion boundaries.
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any supported scalar")
    }

    /// Lossy conversion from an integer count.
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count fits in any supported scalar")
    }

    /// Conversion to `f64`, used at reporting and serialization boundaries.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("supported scalars convert to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
