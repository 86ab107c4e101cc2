//! Exact rational helpers: the `p/q` text form used by every file format,
//! and lossy conversion to `f64` for presentation.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Renders as `p/q` with `q > 0` and `gcd(p, q) = 1`, including integers (`1/1`).
pub fn format(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Accepts `p/q` or a bare integer, with surrounding whitespace.
pub fn parse(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not an exact rational: {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
            let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
            if q.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Rational::new(p, q))
        }
        None => Ok(Rational::from_integer(BigInt::from_str(s).map_err(|_| bad())?)),
    }
}

pub fn parse_list(s: &str) -> Result<Vec<Rational>> {
    s.split(',').map(parse).collect()
}

pub fn parse_slice<S: AsRef<str>>(items: &[S]) -> Result<Vec<Rational>> {
    items.iter().map(|s| parse(s.as_ref())).collect()
}

/// `a ≤ b` by cross-multiplication; much faster than `Ord` on large operands.
pub fn le(a: &Rational, b: &Rational) -> bool {
    a.numer() * b.denom() <= b.numer() * a.denom()
}

/// Nearest `f64` (correctly scaled even when numerator and denominator overflow).
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn pow(base: &Rational, exp: usize) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

pub(crate) mod serde_str {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod serde_vec {
    use serde::ser::SerializeSeq;

    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&format(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Rational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_is_reduced_with_positive_denominator() {
        assert_eq!(format(&ratio(2, -4)), "-1/2");
        assert_eq!(format(&int(1)), "1/1");
        assert_eq!(format(&int(0)), "0/1");
    }

    #[test]
    fn parse_accepts_integers_and_fractions() {
        assert_eq!(parse(" 3/6 ").unwrap(), ratio(1, 2));
        assert_eq!(parse("0").unwrap(), int(0));
        assert_eq!(parse_list("1/2,0,1/2").unwrap().len(), 3);
        assert!(parse("1/0").is_err());
        assert!(parse("x").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn to_f64_handles_huge_parts() {
        let big = BigInt::from(3).pow(2000);
        let r = Rational::new(big.clone() * 2, big * 3);
        assert!((to_f64(&r) - 2.0 / 3.0).abs() < 1e-15);
    }
}
