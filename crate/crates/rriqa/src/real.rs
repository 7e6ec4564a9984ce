//! Scalar abstraction for the pipeline math.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps};

/// Floating-point scalar the pipeline is generic over: `f32` or `f64`.
///
/// Array math (transforms, statistics, quadrature sums) runs in `T`
/// arithmetic. Special-function kernels evaluate internally in `f64`
/// and convert at the boundary, so `f32` pipelines still get kernels
/// accurate to `f32` precision.
pub trait Real:
    Float + FromPrimitive + NumAssignOps + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` constant into `Self`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }

    /// Widens to `f64` for kernels that compute in double precision.
    #[inline]
    fn dbl(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + NumAssignOps + Sum + Debug + Display + Send + Sync + 'static
{
}
