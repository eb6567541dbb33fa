//! Scalar abstraction for sketch cells and scores.

use std::fmt::{Debug, Display};
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};

/// Cell/score scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from a timestamp or count.
    #[inline]
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).unwrap_or_else(Self::max_value)
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}
