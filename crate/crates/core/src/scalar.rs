//! The scalar abstraction shared by the exact and the empirical lane.
//!
//! Signature and quality values are ratios of permutation counts, so every
//! algorithm here only needs field arithmetic plus a way to build a value
//! from an exact integer ratio. `BigRational` gives the exact lane;
//! `f64`/`f32` give the Monte Carlo lane, where invariant checks use a
//! tolerance instead of exact equality.

use std::fmt;
use std::ops::{Div, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Sub<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// The value `num/den`, exact where the type allows it. `den` must be nonzero.
    fn from_ratio(num: BigInt, den: BigInt) -> Self;

    /// Validation slack; `None` means compare exactly.
    fn tolerance() -> Option<Self>;

    fn from_u64_ratio(num: u64, den: u64) -> Self {
        Self::from_ratio(BigInt::from(num), BigInt::from(den))
    }

    /// Equality up to `tolerance`; exact equality for exact scalars.
    fn close_to(&self, other: &Self) -> bool {
        match Self::tolerance() {
            None => self == other,
            Some(tol) => {
                let diff = if self >= other {
                    self.clone() - other.clone()
                } else {
                    other.clone() - self.clone()
                };
                diff <= tol
            }
        }
    }

    /// `self >= other`, allowing `tolerance` of slack below.
    fn at_least(&self, other: &Self) -> bool {
        self >= other || self.close_to(other)
    }
}

impl Scalar for BigRational {
    fn from_ratio(num: BigInt, den: BigInt) -> Self {
        BigRational::new(num, den)
    }

    fn tolerance() -> Option<Self> {
        None
    }
}

impl Scalar for f64 {
    fn from_ratio(num: BigInt, den: BigInt) -> Self {
        BigRational::new(num, den).to_f64().expect("ratio fits in f64 range")
    }

    fn tolerance() -> Option<Self> {
        Some(1e-9)
    }
}

impl Scalar for f32 {
    fn from_ratio(num: BigInt, den: BigInt) -> Self {
        BigRational::new(num, den).to_f32().expect("ratio fits in f32 range")
    }

    fn tolerance() -> Option<Self> {
        Some(1e-4)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_lane_is_exact() {
        let third = BigRational::from_ratio(BigInt::from(1), BigInt::from(3));
        let third_again = BigRational::from_u64_ratio(2, 6);
        assert!(third.close_to(&third_again));
        let off = BigRational::from_u64_ratio(333_333, 1_000_000);
        assert!(!third.close_to(&off));
    }

    #[test]
    fn float_lanes_tolerate_rounding() {
        let a = f64::from_u64_ratio(1, 3);
        assert!(a.close_to(&(1.0 / 3.0)));
        assert!(!a.close_to(&0.334));
        assert!(0.33334f32.close_to(&f32::from_u64_ratio(1, 3)));
        assert!(!0.333f32.close_to(&f32::from_u64_ratio(1, 3)));
        assert!((-1e-10f64).at_least(&0.0));
        assert!(!(-1e-3f64).at_least(&0.0));
    }
}
