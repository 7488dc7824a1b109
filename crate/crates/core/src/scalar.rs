//! Numeric field abstraction shared by the exact (rational) and floating game paths.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use num_rational::BigRational as Rational;

/// A field element usable as a game value.
///
/// Implemented for `f64` and for arbitrary-precision rationals; the game
/// operations are generic so the same code serves both paths.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn from_i64(v: i64) -> Self;

    /// `num / den` in this field.
    fn ratio(num: u64, den: u64) -> Self;

    fn to_f64(&self) -> f64;

    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Scalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for Rational {
    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn ratio(num: u64, den: u64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
}

/// Binomial coefficient C(n, k) as an exact integer (n ≤ 64 keeps it in u64 range for our uses).
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
    }
    acc as u64
}

/// Converts a rational to the nearest representable `f64` without overflowing
/// on large numerators/denominators.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Scale both parts down to a common magnitude before dividing.
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift = (nb.max(db) - 1000).max(0) as usize;
    let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift).to_f64().unwrap_or(1.0);
    if d == 0.0 {
        if n == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(n)
        }
    } else {
        n / d
    }
}

/// Parses `"p/q"`, an integer, or a plain decimal (`"0.125"`, `"1e-3"`) into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::Json(format!("'{text}' is not a rational number"));
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    parse_decimal(t).ok_or_else(bad)
}

fn parse_decimal(t: &str) -> Option<Rational> {
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => (&t[..pos], t[pos + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(digits.parse::<BigInt>().ok()?);
    let scale = exponent - frac_part.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Some(if neg { -value } else { value })
}

/// Exact rational for the shortest decimal that round-trips to `x` (so `0.1` becomes `1/10`).
pub fn rational_from_f64_decimal(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::Json(format!("{x} is not finite")));
    }
    parse_rational(&format!("{x:e}"))
}

/// Formats a rational as `"p/q"`, or `"p"` for integers.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub(crate) fn is_negative<T: Scalar>(v: &T) -> bool {
    *v < T::zero()
}

/// A rational read from JSON as either a number (taken as its shortest decimal) or a
/// `"p/q"` string, and written back as a `"p/q"` string.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactValue(pub Rational);

impl ExactValue {
    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.0)
    }
}

impl From<Rational> for ExactValue {
    fn from(r: Rational) -> Self {
        Self(r)
    }
}

impl Serialize for ExactValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for ExactValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let v = serde_json::Value::deserialize(d)?;
        let r = match &v {
            serde_json::Value::String(s) => parse_rational(s),
            serde_json::Value::Number(n) => match (n.as_i64(), n.as_f64()) {
                (Some(i), _) => Ok(Rational::from_i64(i)),
                (None, Some(f)) => rational_from_f64_decimal(f),
                _ => Err(Error::Json(format!("bad number {n}"))),
            },
            other => Err(Error::Json(format!("expected a number or \"p/q\", got {other}"))),
        };
        r.map(ExactValue).map_err(D::Error::custom)
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(24, 12), 2_704_156);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(0, 0), 1);
    }

    #[test]
    fn parses_rationals_and_decimals() {
        assert_eq!(parse_rational("1/16").unwrap(), q(1, 16));
        assert_eq!(parse_rational("-6").unwrap(), q(-6, 1));
        assert_eq!(parse_rational("0.125").unwrap(), q(1, 8));
        assert_eq!(parse_rational("1e-3").unwrap(), q(1, 1000));
        assert_eq!(parse_rational("-2.5E1").unwrap(), q(-25, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn shortest_decimal_conversion() {
        assert_eq!(rational_from_f64_decimal(0.1).unwrap(), q(1, 10));
        assert_eq!(rational_from_f64_decimal(0.5).unwrap(), q(1, 2));
        assert_eq!(rational_from_f64_decimal(-3.0).unwrap(), q(-3, 1));
    }

    #[test]
    fn formatting() {
        assert_eq!(format_rational(&q(3, 32)), "3/32");
        assert_eq!(format_rational(&q(-6, 1)), "-6");
        assert_eq!(format_rational(&q(0, 5)), "0");
    }

    #[test]
    fn exact_value_json() {
        let v: Vec<ExactValue> = serde_json::from_str(r#"["1/3", 0.25, 2]"#).unwrap();
        assert_eq!(v[0].0, q(1, 3));
        assert_eq!(v[1].0, q(1, 4));
        assert_eq!(v[2].0, q(2, 1));
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"["1/3","1/4","2"]"#);
        assert!(serde_json::from_str::<ExactValue>("true").is_err());
    }

    #[test]
    fn huge_rational_to_f64() {
        let big = num_traits::pow(BigInt::from(10), 400);
        let r = Rational::new(big.clone() * BigInt::from(3), big);
        assert!((rational_to_f64(&r) - 3.0).abs() < 1e-15);
    }
}
