//! Floating-point scalar abstraction: `f32` or `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar the numeric core is generic over.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumCast
    + num_traits::NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`.
    fn of(v: f64) -> Self {
        num_traits::NumCast::from(v).expect("finite f64 converts to scalar")
    }

    /// Lossy conversion to `f64`.
    fn as_f64(self) -> f64 {
        num_traits::NumCast::from(self).expect("scalar converts to f64")
    }

    /// Lossy conversion to `f32` (checkpoint payload precision).
    fn as_f32(self) -> f32 {
        num_traits::NumCast::from(self).expect("scalar converts to f32")
    }

    /// Lossy conversion from `f32`.
    fn of_f32(v: f32) -> Self {
        num_traits::NumCast::from(v).expect("f32 converts to scalar")
    }

    /// Sign with `sign(0) = 0`, unlike `f64::signum`.
    fn sign(self) -> Self {
        if self > Self::zero() {
            Self::one()
        } else if self < Self::zero() {
            -Self::one()
        } else {
            Self::zero()
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_is_zero_at_zero() {
        assert_eq!(0.0f64.sign(), 0.0);
        assert_eq!((-0.0f64).sign(), 0.0);
        assert_eq!(3.5f64.sign(), 1.0);
        assert_eq!((-0.1f32).sign(), -1.0);
    }

    #[test]
    fn conversions_round_trip_for_f32_values() {
        let x = 0.125f32;
        assert_eq!(f32::of(x.as_f64()), x);
        assert_eq!(f64::of_f32(x).as_f32(), x);
    }
}
