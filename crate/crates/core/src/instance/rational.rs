//! Exact rationals and their wire representation.
//!
//! `BigRational` keeps itself reduced with a positive denominator, so
//! structural equality and hashing coincide with numeric equality.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Parses `"a"` or `"a/b"` with `b > 0`. Decimal and exponent notation
/// are rejected so that every value on the wire is exact.
pub fn parse_rational(input: &str) -> Result<Rational> {
    let err = |reason| Error::ParseRational {
        input: input.to_string(),
        reason,
    };
    let (num, den) = match input.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (input, None),
    };
    let numer = parse_integer(num, true).ok_or_else(|| err("numerator is not an integer"))?;
    let denom = match den {
        Some(d) => parse_integer(d, false).ok_or_else(|| err("denominator is not a positive integer"))?,
        None => BigInt::one(),
    };
    if denom.is_zero() {
        return Err(err("zero denominator"));
    }
    Ok(Rational::new(numer, denom))
}

fn parse_integer(s: &str, allow_sign: bool) -> Option<BigInt> {
    let digits = match s.strip_prefix('-') {
        Some(rest) if allow_sign => rest,
        Some(_) => return None,
        None => s,
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Canonical text form: `"a"` for integers, `"a/b"` otherwise.
pub fn format_rational(value: &Rational) -> String {
    value.to_string()
}

/// Lossy conversion for display and for the approximate LP backend.
pub fn to_f64(value: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    value.to_f64().unwrap_or(f64::NAN)
}
