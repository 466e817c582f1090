//! Scalar abstraction for map metrics.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar used for resolutions, distances and potential values.
///
/// Implemented for `f32` and `f64`. Grid bookkeeping stays integer; everything
/// measured in meters or normalized to `[0, 1]` goes through this trait.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; panics on values a float cannot hold
    /// (never the case for the finite constants this crate feeds it).
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 conversion")
    }

    /// Cell counts as scalar, for area and normalization arithmetic.
    fn from_cells(n: usize) -> Self {
        Self::from_usize(n).expect("usize conversion")
    }

    fn sqrt_two() -> Self {
        Self::c(std::f64::consts::SQRT_2)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
