//! Scalar abstraction shared by every numerical kernel.
//!
//! Kernels are written once against [`Real`] and instantiated for `f32`
//! and `f64`. Geometry and metadata (pitches, sound speeds, times) stay in
//! `f64`; only sample values are generic.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point sample type: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into `Self`, rounding to nearest.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable as Real")
    }

    /// Widens to `f64` for metadata arithmetic and reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real widens to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lit_round_trips_for_both_widths() {
        assert_eq!(<f64 as Real>::lit(0.478), 0.478);
        assert_eq!(<f32 as Real>::lit(0.5), 0.5f32);
        assert_eq!(0.25f32.as_f64(), 0.25);
    }
}
