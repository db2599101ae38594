use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar for the analytic models: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Construct from an `f64` literal (rounds when `Self` is `f32`).
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("finite literal")
    }
}

impl Real for f32 {}
impl Real for f64 {}
