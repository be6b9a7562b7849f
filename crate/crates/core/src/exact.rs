//! Small helpers for exact rationals and decimal-string serialization.

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Parses `"3"`, `"0.25"`, `"-1.5"` or `"7/16"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let bad = || Error::param("rational", format!("cannot parse `{text}`"));
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let den = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let value = BigRational::new(num, den);
    Ok(if negative { -value } else { value })
}

/// Renders a rational as `num/den` (or just `num` for integers).
pub fn format_rational(value: &BigRational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn ceil_to_biguint(value: &BigRational) -> BigUint {
    let c = value.ceil().to_integer();
    c.to_biguint().unwrap_or_default()
}

pub fn floor_to_biguint(value: &BigRational) -> BigUint {
    let f = value.floor().to_integer();
    f.to_biguint().unwrap_or_default()
}

pub fn ratio_from_u64(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn ratio_from_biguint(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Numerator and denominator of a non-negative rational as unsigned integers.
pub fn non_negative_parts(value: &BigRational) -> Option<(BigUint, BigUint)> {
    if value.is_negative() {
        return None;
    }
    let num = value.numer().to_biguint()?;
    let den = value.denom().to_biguint()?;
    Some((num, den))
}

/// Lossy conversion that survives numerators and denominators far beyond `f64` range.
pub fn rational_to_f64(value: &BigRational) -> f64 {
    if let Some(f) = value.to_f64() {
        if f.is_finite() {
            return f;
        }
    }
    let (sign, num) = value.numer().clone().into_parts();
    let den = value.denom().magnitude().clone();
    let shift = num.bits() as i64 - den.bits() as i64;
    // Rescale so both sides have ~64 significant bits.
    let (n, d) = if shift >= 0 {
        (num, den << shift as usize)
    } else {
        (num << (-shift) as usize, den)
    };
    let n_bits = n.bits().saturating_sub(64);
    let n = (&n >> n_bits).to_f64().unwrap_or(0.0);
    let d = (&d >> n_bits).to_f64().unwrap_or(1.0);
    let mag = (n / d) * 2f64.powi(shift as i32);
    if sign == Sign::Minus {
        -mag
    } else {
        mag
    }
}

/// `x / 2^bits` as a double.
pub fn dyadic_to_f64(x: &BigUint, bits: u32) -> f64 {
    let len = x.bits();
    if len <= 64 {
        return x.to_f64().unwrap_or(0.0) * 2f64.powi(-(bits as i32));
    }
    let drop = len - 64;
    (x >> drop).to_f64().unwrap_or(0.0) * 2f64.powi(drop as i32 - bits as i32)
}

/// `ceil(value * n)` for a non-negative rational, saturating at `u64::MAX`.
pub fn ceil_times(value: &BigRational, n: u64) -> u64 {
    ceil_to_biguint(&(value * BigRational::from_integer(BigInt::from(n)))).to_u64().unwrap_or(u64::MAX)
}

/// `floor(value * n)` for a non-negative rational, saturating at `u64::MAX`.
pub fn floor_times(value: &BigRational, n: u64) -> u64 {
    floor_to_biguint(&(value * BigRational::from_integer(BigInt::from(n)))).to_u64().unwrap_or(u64::MAX)
}

/// Serde helpers storing big integers as decimal strings.
pub mod decimal {
    use num_bigint::BigUint;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&value.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(D::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(values: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(values.len()))?;
            for v in values {
                seq.serialize_element(&v.to_string())?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigUint>, D::Error> {
            let texts = Vec::<String>::deserialize(d)?;
            texts
                .iter()
                .map(|t| t.parse().map_err(D::Error::custom))
                .collect()
        }
    }
}

/// Serde helpers storing any `Display + FromStr` value (e.g. `u64`) as a string.
pub mod string {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};
    use std::fmt::Display;
    use std::str::FromStr;

    pub fn serialize<T: Display, S: Serializer>(value: &T, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&value.to_string())
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<T: Display, S: Serializer>(values: &[T], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(values.len()))?;
            for v in values {
                seq.serialize_element(&v.to_string())?;
            }
            seq.end()
        }

        pub fn deserialize<'de, T, D>(d: D) -> Result<Vec<T>, D::Error>
        where
            T: FromStr,
            T::Err: Display,
            D: Deserializer<'de>,
        {
            Vec::<String>::deserialize(d)?
                .iter()
                .map(|t| t.parse().map_err(D::Error::custom))
                .collect()
        }
    }
}

/// Serde helpers storing rationals as `"num/den"` strings.
pub mod rational {
    use num_rational::BigRational;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        super::parse_rational(&text).map_err(D::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(values: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(values.len()))?;
            for v in values {
                seq.serialize_element(&super::super::format_rational(v))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
            let texts = Vec::<String>::deserialize(d)?;
            texts
                .iter()
                .map(|t| super::super::parse_rational(t).map_err(D::Error::custom))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_and_fractions() {
        assert_eq!(parse_rational("0.25").unwrap(), ratio_from_u64(1, 4));
        assert_eq!(parse_rational("7/16").unwrap(), ratio_from_u64(7, 16));
        assert_eq!(parse_rational("3").unwrap(), ratio_from_u64(3, 1));
        assert_eq!(parse_rational(".5").unwrap(), ratio_from_u64(1, 2));
        assert_eq!(parse_rational("-1.5").unwrap(), -ratio_from_u64(3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn huge_rationals_convert_to_f64() {
        let big = BigUint::one() << 3000usize;
        let r = ratio_from_biguint(big.clone() * 3u32, big << 1usize);
        assert!((rational_to_f64(&r) - 1.5).abs() < 1e-15);
        let x = BigUint::one() << 2047usize;
        assert_eq!(dyadic_to_f64(&x, 2048), 0.5);
    }
}
