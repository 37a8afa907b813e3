//! Exact rationals and the few rounding helpers the rest of the crate leans on.

use num::bigint::Sign;
use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};
use std::str::FromStr;

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// 2^e as a rational, negative exponents allowed.
pub fn pow2(e: i64) -> Rat {
    let p = BigInt::one() << (e.unsigned_abs() as usize);
    if e >= 0 {
        Rat::from_integer(p)
    } else {
        Rat::new(BigInt::one(), p)
    }
}

pub fn pow_int(base: &Rat, e: u32) -> Rat {
    num::pow::pow(base.clone(), e as usize)
}

/// Largest k/2^bits that is <= x.
pub fn floor_bits(x: &Rat, bits: u32) -> Rat {
    let scale = BigInt::one() << bits as usize;
    let k = (x * Rat::from_integer(scale.clone())).floor().to_integer();
    Rat::new(k, scale)
}

/// Smallest k/2^bits that is >= x.
pub fn ceil_bits(x: &Rat, bits: u32) -> Rat {
    let scale = BigInt::one() << bits as usize;
    let k = (x * Rat::from_integer(scale.clone())).ceil().to_integer();
    Rat::new(k, scale)
}

/// floor(x * 2^m), as a big integer.
pub fn floor_scaled(x: &Rat, m: u32) -> BigInt {
    let (n, d) = (x.numer() << m as usize, x.denom().clone());
    n.div_floor(&d)
}

/// ceil(x * 2^m).
pub fn ceil_scaled(x: &Rat, m: u32) -> BigInt {
    let (n, d) = (x.numer() << m as usize, x.denom().clone());
    let (q, r) = n.div_mod_floor(&d);
    if r.is_zero() {
        q
    } else {
        q + 1
    }
}

pub fn to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact value of a finite double.
pub fn from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

pub fn min_rat<'a>(a: &'a Rat, b: &'a Rat) -> &'a Rat {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn max_rat<'a>(a: &'a Rat, b: &'a Rat) -> &'a Rat {
    if a >= b {
        a
    } else {
        b
    }
}

/// Parse "3", "-0.125", "1e-3", "2.5E+2" or "1/3" into an exact rational.
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|e| format!("{s}: {e}"))?;
        let d = BigInt::from_str(d.trim()).map_err(|e| format!("{s}: {e}"))?;
        if d.is_zero() {
            return Err(format!("{s}: zero denominator"));
        }
        return Ok(Rat::new(n, d));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (
            &s[..i],
            s[i + 1..].parse::<i64>().map_err(|e| format!("{s}: {e}"))?,
        ),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(format!("{s}: not a number"));
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(format!("{s}: not a number"));
    }
    let digits = format!("{ip}{fp}");
    let n = BigInt::from_str(if digits.is_empty() { "0" } else { &digits })
        .map_err(|e| format!("{s}: {e}"))?;
    let e10 = exp - fp.len() as i64;
    let ten = BigInt::from(10);
    let mut r = if e10 >= 0 {
        Rat::from_integer(n * num::pow::pow(ten, e10 as usize))
    } else {
        Rat::new(n, num::pow::pow(ten, (-e10) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Enclosure [lo, hi] of sqrt(x) for x >= 0; exact when x is a square of a rational.
pub fn sqrt_bounds(x: &Rat, bits: u32) -> (Rat, Rat) {
    assert!(!x.is_negative(), "sqrt of negative rational");
    if x.is_zero() {
        return (Rat::zero(), Rat::zero());
    }
    let (n, d) = (x.numer(), x.denom());
    let (rn, rd) = (n.sqrt(), d.sqrt());
    if &(&rn * &rn) == n && &(&rd * &rd) == d {
        let r = Rat::new(rn, rd);
        return (r.clone(), r);
    }
    // floor(sqrt(x * 4^bits)) / 2^bits
    let scaled = (n << (2 * bits as usize)) / d;
    let lo = scaled.sqrt();
    let scale = BigInt::one() << bits as usize;
    let lo_r = Rat::new(lo.clone(), scale.clone());
    let hi_r = Rat::new(lo + 1, scale);
    (lo_r, hi_r)
}

pub fn is_positive(x: &Rat) -> bool {
    x.numer().sign() == Sign::Plus
}

/// JSON encoding as a `[numerator, denominator]` pair of integers of any size.
pub mod pair {
    use super::Rat;
    use num::BigInt;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::str::FromStr;

    pub fn big_to_number(n: &BigInt) -> serde_json::Number {
        serde_json::Number::from_str(&n.to_string()).expect("integer literal")
    }

    pub fn number_to_big(n: &serde_json::Number) -> Result<BigInt, String> {
        BigInt::from_str(&n.to_string()).map_err(|_| format!("expected an integer, got {n}"))
    }

    pub fn to_value(r: &Rat) -> serde_json::Value {
        serde_json::Value::Array(vec![
            serde_json::Value::Number(big_to_number(r.numer())),
            serde_json::Value::Number(big_to_number(r.denom())),
        ])
    }

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        [big_to_number(r.numer()), big_to_number(r.denom())].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let [n, q] = <[serde_json::Number; 2]>::deserialize(d)?;
        let n = number_to_big(&n).map_err(D::Error::custom)?;
        let q = number_to_big(&q).map_err(D::Error::custom)?;
        if q == BigInt::from(0) {
            return Err(D::Error::custom("zero denominator"));
        }
        Ok(Rat::new(n, q))
    }

    pub mod vec {
        use super::super::Rat;
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        #[derive(Serialize, Deserialize)]
        struct W(#[serde(with = "super")] Rat);

        pub fn serialize<S: Serializer>(v: &[Rat], s: S) -> Result<S::Ok, S::Error> {
            v.iter().map(|r| W(r.clone())).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rat>, D::Error> {
            Ok(Vec::<W>::deserialize(d)?.into_iter().map(|w| w.0).collect())
        }
    }

    pub mod opt {
        use super::super::Rat;
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        #[derive(Serialize, Deserialize)]
        struct W(#[serde(with = "super")] Rat);

        pub fn serialize<S: Serializer>(v: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
            v.as_ref().map(|r| W(r.clone())).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rat>, D::Error> {
            Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
        }
    }
}

/// Accepts a JSON number (read exactly from its decimal text), a "p/q" string
/// or a `[p, q]` pair.
pub mod loose {
    use super::{parse_rat, Rat};
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(serde_json::Number),
        Text(String),
        Pair([serde_json::Number; 2]),
    }

    pub fn from_value(v: &serde_json::Value) -> Result<Rat, String> {
        let raw: Raw = serde_json::from_value(v.clone()).map_err(|e| e.to_string())?;
        convert(raw)
    }

    fn convert(raw: Raw) -> Result<Rat, String> {
        match raw {
            Raw::Num(n) => parse_rat(&n.to_string()),
            Raw::Text(s) => parse_rat(&s),
            Raw::Pair([n, d]) => parse_rat(&format!("{n}/{d}")),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        convert(Raw::deserialize(d)?).map_err(D::Error::custom)
    }

    pub mod opt {
        use super::*;
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rat>, D::Error> {
            match Option::<Raw>::deserialize(d)? {
                None => Ok(None),
                Some(r) => convert(r).map(Some).map_err(D::Error::custom),
            }
        }
    }

    pub mod vec {
        use super::*;
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rat>, D::Error> {
            Vec::<Raw>::deserialize(d)?
                .into_iter()
                .map(|r| convert(r).map_err(D::Error::custom))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_decimals_exactly() {
        assert_eq!(parse_rat("0.1").unwrap(), rat(1, 10));
        assert_eq!(parse_rat("-1.25").unwrap(), rat(-5, 4));
        assert_eq!(parse_rat("1e-3").unwrap(), rat(1, 1000));
        assert_eq!(parse_rat("2.5E+2").unwrap(), int(250));
        assert_eq!(parse_rat("1/3").unwrap(), rat(1, 3));
        assert_eq!(parse_rat(".5").unwrap(), rat(1, 2));
        assert!(parse_rat("abc").is_err());
        assert!(parse_rat("1/0").is_err());
    }

    #[test]
    fn directed_rounding() {
        let third = rat(1, 3);
        let lo = floor_bits(&third, 10);
        let hi = ceil_bits(&third, 10);
        assert!(lo < third && third < hi);
        assert_eq!(&hi - &lo, pow2(-10));
        let neg = -third;
        assert!(floor_bits(&neg, 10) < neg);
        assert_eq!(floor_scaled(&rat(-1, 3), 2), BigInt::from(-2));
        assert_eq!(ceil_scaled(&rat(-1, 3), 2), BigInt::from(-1));
        assert_eq!(ceil_scaled(&rat(1, 2), 1), BigInt::from(1));
    }

    #[test]
    fn sqrt_exact_and_enclosed() {
        assert_eq!(sqrt_bounds(&rat(9, 25), 64), (rat(3, 5), rat(3, 5)));
        let (lo, hi) = sqrt_bounds(&int(2), 64);
        assert!(&lo * &lo < int(2) && int(2) < &hi * &hi);
        assert!(&hi - &lo <= pow2(-64));
    }

    #[test]
    fn pair_roundtrip_big() {
        #[derive(serde::Serialize, serde::Deserialize, PartialEq, Debug)]
        struct T(#[serde(with = "pair")] Rat);
        let big = Rat::new(BigInt::from(3).pow(80u32), BigInt::from(7));
        let s = serde_json::to_string(&T(big.clone())).unwrap();
        assert!(s.starts_with('['));
        let back: T = serde_json::from_str(&s).unwrap();
        assert_eq!(back.0, big);
    }
}
