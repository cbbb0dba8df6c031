//! Exact rationals for probabilities and flow thresholds, with a decimal
//! parser so that `0.9` in a config means exactly `9/10`.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Parses `"a/b"`, `"0.25"`, `"3"`, `"1e-3"` or `"2.5E2"` exactly.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).ok()?;
        let d = BigInt::from_str(d.trim()).ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all = format!("{int_part}{frac_part}");
    let mut num = BigInt::from_str(if all.is_empty() { "0" } else { &all }).ok()?;
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let r = if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Some(r)
}

/// An exact non-negative rational with a lenient serde form: strings such as
/// `"9/10"` or numbers such as `0.9` (read through their shortest decimal
/// representation).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exact(pub BigRational);

impl Exact {
    pub fn from_integer(n: i64) -> Self {
        Exact(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Exact(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl FromStr for Exact {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_rational(s).map(Exact).ok_or_else(|| format!("not a rational number: {s:?}"))
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Exact;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational as a number or a string like \"9/10\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Exact, E> {
                v.parse().map_err(E::custom)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Exact, E> {
                Ok(Exact(BigRational::from_integer(BigInt::from(v))))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Exact, E> {
                Ok(Exact(BigRational::from_integer(BigInt::from(v))))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Exact, E> {
                if !v.is_finite() {
                    return Err(E::custom("non-finite rational"));
                }
                format!("{v:?}").parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    r.to_f64().unwrap_or_else(|| {
        if r.is_positive() {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    })
}

/// `⌈r⌉` for a non-negative rational, as an unsigned integer.
pub fn ceil_nonneg(r: &BigRational) -> BigUint {
    let c = r.ceil().to_integer();
    c.to_biguint().unwrap_or_default()
}

/// `⌊r⌋` for a non-negative rational.
pub fn floor_nonneg(r: &BigRational) -> BigUint {
    r.floor().to_integer().to_biguint().unwrap_or_default()
}

/// `⌊p · 2^64⌋` for `p ∈ [0,1]`, the acceptance threshold for a uniform `u64`.
pub fn u64_threshold(p: &BigRational) -> u128 {
    let scaled = p * BigRational::from_integer(BigInt::one() << 64u32);
    scaled.floor().to_integer().to_u128().unwrap_or(0).min(1u128 << 64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rational("0.9").unwrap(), BigRational::new(9.into(), 10.into()));
        assert_eq!(parse_rational("1e-3").unwrap(), BigRational::new(1.into(), 1000.into()));
        assert_eq!(parse_rational("2.5E2").unwrap(), BigRational::from_integer(250.into()));
        assert_eq!(parse_rational("3/6").unwrap(), BigRational::new(1.into(), 2.into()));
        assert_eq!(parse_rational(".5").unwrap(), BigRational::new(1.into(), 2.into()));
        assert!(parse_rational("x").is_none());
        assert!(parse_rational("1/0").is_none());
    }

    #[test]
    fn serde_forms() {
        let a: Exact = serde_json::from_str("0.9").unwrap();
        let b: Exact = serde_json::from_str("\"9/10\"").unwrap();
        let c: Exact = serde_json::from_str("1").unwrap();
        assert_eq!(a, b);
        assert_eq!(c, Exact::from_integer(1));
        assert_eq!(serde_json::to_string(&a).unwrap(), "\"9/10\"");
    }

    #[test]
    fn thresholds() {
        assert_eq!(u64_threshold(&BigRational::from_integer(1.into())), 1u128 << 64);
        assert_eq!(u64_threshold(&BigRational::new(1.into(), 2.into())), 1u128 << 63);
        assert_eq!(u64_threshold(&BigRational::zero()), 0);
    }
}
