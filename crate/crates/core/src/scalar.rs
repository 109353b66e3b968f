//! Scalar abstraction for the numerical core.
//!
//! Everything downstream (grids, operators, entropies, oracles) is written
//! against [`Scalar`] so the same code runs in `f32` and `f64`. The crate
//! root exports concrete `f64` aliases for the common types.

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating-point scalar usable throughout the crate: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal (grid spacings, catalog parameters,
    /// tolerances) into this scalar type.
    fn real(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }

    /// Lossy view as `f64`, used for diagnostics and error messages.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `x²`, spelled out because `powi` pessimizes some hot loops.
#[inline]
pub fn sq<S: Scalar>(x: S) -> S {
    x * x
}
