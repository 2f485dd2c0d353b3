//! Exact rationals for the weight-band half-width.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Parses `"0.25"`, `"3/8"`, `"1e-1"` or `"7"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let bad = || Error::InvalidInput(format!("{text:?} is not a decimal or rational number"));
    let s = text.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part
            .chars()
            .chain(frac_part.chars())
            .all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut numer: BigInt = all.parse().map_err(|_| bad())?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// Nearest `f64` to a big rational.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Fallback for magnitudes outside f64 range.
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Nearest `f64` to `num / 2^shift`.
pub fn ratio_pow2_to_f64(num: &BigUint, shift: u64) -> f64 {
    rational_to_f64(&BigRational::new(
        BigInt::from(num.clone()),
        BigInt::from(BigUint::one() << shift),
    ))
}

/// Band half-width `ε`, an exact rational in `(0, 1)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Epsilon {
    value: BigRational,
    text: String,
}

/// Integer endpoints `(⌊(1−ε)p/2⌋, ⌈(1+ε)p/2⌉)` of the weight band.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Band {
    pub lo: u64,
    pub hi: u64,
}

impl Band {
    /// True when a nonzero codeword of weight `w` counts towards `K_ε`.
    #[inline]
    pub fn is_outside(&self, w: u64) -> bool {
        w <= self.lo || w >= self.hi
    }
}

impl Epsilon {
    pub fn new(value: BigRational) -> Result<Self> {
        if value <= BigRational::zero() || value >= BigRational::one() {
            return Err(Error::EpsilonOutOfRange(value.to_string()));
        }
        let text = value.to_string();
        Ok(Self { value, text })
    }

    pub fn from_ratio(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::EpsilonOutOfRange(format!("{numer}/0")));
        }
        Self::new(BigRational::new(numer.into(), denom.into()))
    }

    pub fn value(&self) -> &BigRational {
        &self.value
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.value)
    }

    /// Band endpoints computed with exact floor and ceiling.
    pub fn band(&self, p: u64) -> Band {
        let half_p = BigRational::new(BigInt::from(p), BigInt::from(2u8));
        let one = BigRational::one();
        let lo = ((&one - &self.value) * &half_p).floor().to_integer();
        let hi = ((&one + &self.value) * &half_p).ceil().to_integer();
        Band {
            lo: lo.to_u64().expect("band endpoint is nonnegative"),
            hi: hi.to_u64().expect("band endpoint is nonnegative"),
        }
    }

    /// `⌊(1−ε)p/2⌋`.
    pub fn lower_index(&self, p: u64) -> u64 {
        self.band(p).lo
    }
}

impl FromStr for Epsilon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let value = parse_rational(s)?;
        let mut eps = Epsilon::new(value).map_err(|_| Error::EpsilonOutOfRange(s.to_string()))?;
        eps.text = s.trim().to_string();
        Ok(eps)
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl fmt::Debug for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Epsilon({})", self.value)
    }
}

impl Serialize for Epsilon {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Epsilon {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `round(alpha · p)` with halves rounded up.
pub fn round_product(alpha: &BigRational, p: u64) -> u64 {
    let x = alpha * BigRational::from_integer(BigInt::from(p));
    let (q, r) = x.numer().div_mod_floor(x.denom());
    let twice_r: BigInt = r * 2u8;
    let up = twice_r >= *x.denom();
    (q + if up { BigInt::one() } else { BigInt::zero() })
        .to_u64()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimal_forms() {
        let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(parse_rational("0.5").unwrap(), q(1, 2));
        assert_eq!(parse_rational(".25").unwrap(), q(1, 4));
        assert_eq!(parse_rational("3/8").unwrap(), q(3, 8));
        assert_eq!(parse_rational("1e-1").unwrap(), q(1, 10));
        assert_eq!(parse_rational("-2.5E1").unwrap(), q(-25, 1));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn band_uses_exact_arithmetic() {
        // 0.1 is not representable in binary; (1 - 0.1) * 10 / 2 = 4.5 exactly
        let e: Epsilon = "0.1".parse().unwrap();
        assert_eq!(e.band(10), Band { lo: 4, hi: 6 });
        // (1 - 0.6) * 5 / 2 = 1 exactly; a float evaluation gives 0.99999...
        let e: Epsilon = "0.6".parse().unwrap();
        assert_eq!(e.band(5), Band { lo: 1, hi: 4 });
        let e: Epsilon = "0.9".parse().unwrap();
        assert_eq!(e.band(4), Band { lo: 0, hi: 4 });
        let e: Epsilon = "0.5".parse().unwrap();
        assert_eq!(e.band(2), Band { lo: 0, hi: 2 });
        assert_eq!(e.band(32), Band { lo: 8, hi: 24 });
    }

    #[test]
    fn epsilon_range_is_open() {
        assert!("0".parse::<Epsilon>().is_err());
        assert!("1".parse::<Epsilon>().is_err());
        assert!("1.5".parse::<Epsilon>().is_err());
        assert!("0.999".parse::<Epsilon>().is_ok());
    }

    #[test]
    fn rounding_products() {
        let a = parse_rational("0.95").unwrap();
        assert_eq!(round_product(&a, 24), 23);
        assert_eq!(round_product(&a, 32), 30);
        assert_eq!(round_product(&a, 40), 38);
        let half = parse_rational("0.5").unwrap();
        assert_eq!(round_product(&half, 5), 3);
    }

    #[test]
    fn big_ratio_conversion() {
        let v = ratio_pow2_to_f64(&BigUint::from(15_033_173u32), 25);
        assert!((v - 15_033_173.0 / 33_554_432.0).abs() < 1e-16);
    }
}
