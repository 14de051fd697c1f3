//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::num::ParseFloatError;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar the simulator is generic over (`f32` or `f64`).
///
/// `Display`/`FromStr` are required so grid files round-trip bitwise.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + Debug
    + Display
    + FromStr<Err = ParseFloatError>
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }
}

impl Real for f32 {}
impl Real for f64 {}
