//! Scalar abstractions.
//!
//! Two families are used throughout the crate:
//!
//! * [`Field`]: anything Gaussian elimination can run on. Implemented for
//!   `f32`, `f64` (with a relative pivot threshold) and [`Rational`] (exact).
//! * [`Real`]: floating point types used for speeds and transport times.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FloatConst, FromPrimitive, One, Signed, ToPrimitive, Zero};

/// Exact rational scalar.
pub type Rational = BigRational;

/// Relative pivot threshold used by floating point elimination.
pub const DEFAULT_PIVOT_TOLERANCE: f64 = 1e-9;

/// Field operations needed by the canonical-form elimination.
pub trait Field:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// `true` when the arithmetic is exact.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;

    /// Best-effort conversion of a decimal value. Exact types convert the
    /// binary value of `v` exactly.
    fn from_f64(v: f64) -> Self;

    fn to_f64(&self) -> f64;

    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }

    /// Whether `self` counts as zero for pivoting, given the largest entry
    /// magnitude `scale` of the original matrix and relative tolerance `tol`.
    fn is_negligible(&self, scale: f64, tol: f64) -> bool;
}

macro_rules! impl_float_field {
    ($t:ty) => {
        impl Field for $t {
            const EXACT: bool = false;

            fn from_i64(v: i64) -> Self {
                v as $t
            }

            fn from_f64(v: f64) -> Self {
                v as $t
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn is_negligible(&self, scale: f64, tol: f64) -> bool {
                (*self as f64).abs() <= tol * scale
            }
        }
    };
}

impl_float_field!(f32);
impl_float_field!(f64);

impl Field for BigRational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).expect("finite value")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn magnitude(&self) -> f64 {
        Field::to_f64(&self.abs())
    }

    fn is_negligible(&self, _scale: f64, _tol: f64) -> bool {
        self.is_zero()
    }
}

/// Floating point type for speeds, transport times and time formulas.
pub trait Real:
    num_traits::Float + FloatConst + FromPrimitive + Debug + Default + Send + Sync + 'static
{
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("representable literal")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Parses a decimal string into an exact rational (`"0.25"`, `"-3"`, `"1/3"`, `"1e-3"`).
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let negative = mantissa.starts_with('-');
    let mantissa = mantissa.trim_start_matches(['+', '-']);
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let mut value = BigRational::from_integer(digits);
    let scale = exponent - frac_part.len() as i32;
    let power = BigRational::from_integer(num_traits::pow(
        BigInt::from(10),
        scale.unsigned_abs() as usize,
    ));
    if scale >= 0 {
        value *= power;
    } else {
        value /= power;
    }
    if negative {
        value = -value;
    }
    Some(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rational("0.25"), Some(q(1, 4)));
        assert_eq!(parse_rational("-3"), Some(q(-3, 1)));
        assert_eq!(parse_rational("1/3"), Some(q(1, 3)));
        assert_eq!(parse_rational("2.5e2"), Some(q(250, 1)));
        assert_eq!(parse_rational("1e-3"), Some(q(1, 1000)));
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("1/0"), None);
    }

    #[test]
    fn float_negligibility_is_relative() {
        assert!(1e-12_f64.is_negligible(10.0, 1e-9));
        assert!(!1e-6_f64.is_negligible(10.0, 1e-9));
        assert!(!q(1, 1_000_000_000).is_negligible(1.0, 1.0));
    }
}
