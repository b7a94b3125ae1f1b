//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumCast};

/// Floating point scalar: `f32` or `f64`.
///
/// All of the model, filter and estimator code is written against this
/// trait. The tolerances quoted in the tests assume `f64`; `f32` works for
/// the algebraic maps but loses the long-horizon identities.
pub trait Real: Float + FloatConst + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` literal. Never fails for finite inputs.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("finite literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
