//! Exact rational helpers shared by every module.
//!
//! Rationals cross every external boundary as strings of the form `"p/q"`
//! (or `"p"` for integers). Parsing additionally accepts finite decimals such
//! as `"0.35"`, which are converted exactly.

use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// `n / d` as an exact rational. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseRationalError(pub String);

/// Parses `"p/q"`, `"p"`, or a finite decimal like `"-0.125"`.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let t = s.trim();
    if t.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if frac.is_empty() && whole_digits.is_empty() {
            return Err(err());
        }
        if !whole_digits.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
        {
            return Err(err());
        }
        let digits = format!("{whole_digits}{frac}");
        let n: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().map_err(|_| err())?
        };
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let q = Rational::new(n, d);
        return Ok(if negative { -q } else { q });
    }
    let n: BigInt = t.parse().map_err(|_| err())?;
    Ok(Rational::from_integer(n))
}

/// Canonical string form: `"p/q"` in lowest terms, or `"p"` when integral.
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Display adaptor for `format_rational`.
pub struct Display<'a>(pub &'a Rational);

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(self.0))
    }
}

pub fn pow(q: &Rational, e: u64) -> Rational {
    let e = usize::try_from(e).expect("exponent fits usize");
    Rational::new_raw(
        num_traits::pow(q.numer().clone(), e),
        num_traits::pow(q.denom().clone(), e),
    )
}

/// Nearest `f64` (saturating to +-inf for astronomically large values).
pub fn to_f64(q: &Rational) -> f64 {
    if let Some(v) = q.to_f64() {
        if v.is_finite() && (v != 0.0 || q.is_zero()) {
            return v;
        }
    }
    let l = log2_abs(q);
    let mag = l.exp2();
    if q.is_negative() {
        -mag
    } else {
        mag
    }
}

/// `log2 |x|` for any nonzero integer, accurate to ~1e-15 relative.
pub fn log2_bigint(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.abs().to_f64().unwrap_or(f64::INFINITY).log2();
    }
    let shift = bits - 64;
    let top: BigInt = x.abs() >> shift;
    top.to_f64().unwrap_or(f64::INFINITY).log2() + shift as f64
}

/// `log2 |q|`; `-inf` for zero.
pub fn log2_abs(q: &Rational) -> f64 {
    if q.is_zero() {
        return f64::NEG_INFINITY;
    }
    log2_bigint(q.numer()) - log2_bigint(q.denom())
}

/// Smallest `f64` that is `>= q` (used for reporting error radii).
pub fn to_f64_upper(q: &Rational) -> f64 {
    let v = to_f64(q);
    if !v.is_finite() {
        return v;
    }
    let back = Rational::from_float(v);
    match back {
        Some(b) if &b >= q => v,
        _ => v.next_up(),
    }
}

pub fn sign(q: &Rational) -> Sign {
    if q.is_zero() {
        Sign::NoSign
    } else if q.is_negative() {
        Sign::Minus
    } else {
        Sign::Plus
    }
}

/// Largest power of two `2^-p` (p >= 0) that is `<= q`; `q` must be positive and `<= 1`.
pub fn dyadic_floor(q: &Rational) -> Rational {
    assert!(q.is_positive());
    let mut p: u64 = 0;
    let estimate = (-log2_abs(q)).floor();
    if estimate.is_finite() && estimate > 2.0 {
        p = estimate as u64 - 2;
    }
    let mut cand = pow(&rat(1, 2), p);
    while &cand > q {
        p += 1;
        cand = pow(&rat(1, 2), p);
    }
    cand
}

pub fn lcm_range(lo: u64, hi: u64) -> BigInt {
    let mut acc = BigInt::one();
    for v in lo..=hi {
        acc = acc.lcm(&BigInt::from(v));
    }
    acc
}

/// `sum_{i=lo}^{hi} 1/i`, exactly.
pub fn harmonic_sum(lo: u64, hi: u64) -> Rational {
    assert!(lo >= 1);
    if hi < lo {
        return Rational::zero();
    }
    let den = lcm_range(lo, hi);
    let mut num = BigInt::zero();
    for i in lo..=hi {
        num += &den / BigInt::from(i);
    }
    Rational::new(num, den)
}

/// serde adaptors: rationals as `"p/q"` strings.
pub mod serde_rational {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for q in v {
                seq.serialize_element(&format_rational(q))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter()
                .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
                .collect()
        }
    }

    pub mod vec2 {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for row in v {
                let row: Vec<String> = row.iter().map(format_rational).collect();
                seq.serialize_element(&row)?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> Result<Vec<Vec<Rational>>, D::Error> {
            let v = Vec::<Vec<String>>::deserialize(d)?;
            v.iter()
                .map(|row| {
                    row.iter()
                        .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
                        .collect()
                })
                .collect()
        }
    }

    pub mod vec3 {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[Vec<Vec<Rational>>], s: S) -> Result<S::Ok, S::Error> {
            let strings: Vec<Vec<Vec<String>>> = v
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|c| c.iter().map(format_rational).collect())
                        .collect()
                })
                .collect();
            serde::Serialize::serialize(&strings, s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> Result<Vec<Vec<Vec<Rational>>>, D::Error> {
            let v = Vec::<Vec<Vec<String>>>::deserialize(d)?;
            v.iter()
                .map(|row| {
                    row.iter()
                        .map(|c| {
                            c.iter()
                                .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
                                .collect()
                        })
                        .collect()
                })
                .collect()
        }
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(q: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
            match q {
                Some(q) => s.serialize_some(&format_rational(q)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
            let v = Option::<String>::deserialize(d)?;
            v.map(|s| parse_rational(&s).map_err(serde::de::Error::custom))
                .transpose()
        }
    }

    pub mod option_vec {
        use super::*;

        pub fn serialize<S: Serializer>(
            q: &Option<Vec<Rational>>,
            s: S,
        ) -> Result<S::Ok, S::Error> {
            match q {
                Some(v) => s.serialize_some(&v.iter().map(format_rational).collect::<Vec<_>>()),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> Result<Option<Vec<Rational>>, D::Error> {
            let v = Option::<Vec<String>>::deserialize(d)?;
            v.map(|v| {
                v.iter()
                    .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
                    .collect()
            })
            .transpose()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rational(" -7 ").unwrap(), int(-7));
        assert_eq!(parse_rational("0.35").unwrap(), rat(7, 20));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1.2.3").is_err());
    }

    #[test]
    fn format_canonical() {
        assert_eq!(format_rational(&rat(6, 4)), "3/2");
        assert_eq!(format_rational(&int(5)), "5");
        assert_eq!(format_rational(&rat(-1, 3)), "-1/3");
    }

    #[test]
    fn huge_values_convert() {
        let big = pow(&int(3), 2000);
        let l = log2_abs(&big);
        assert!((l - 2000.0 * 3f64.log2()).abs() < 1e-9 * l);
        assert!(to_f64(&big).is_infinite());
        let tiny = pow(&rat(1, 3), 2000);
        assert!(to_f64(&tiny) >= 0.0);
        assert!((log2_abs(&tiny) + 2000.0 * 3f64.log2()).abs() < 1e-6);
    }

    #[test]
    fn upper_rounding() {
        let third = rat(1, 3);
        let u = to_f64_upper(&third);
        assert!(Rational::from_float(u).unwrap() >= third);
    }

    #[test]
    fn dyadic_floor_is_tight() {
        assert_eq!(dyadic_floor(&rat(3, 8)), rat(1, 4));
        assert_eq!(dyadic_floor(&rat(1, 4)), rat(1, 4));
        assert_eq!(dyadic_floor(&int(1)), int(1));
        let q = pow(&rat(1, 3), 50);
        let d = dyadic_floor(&q);
        assert!(d <= q && d.clone() * int(2) > q);
    }

    #[test]
    fn harmonic_run_from_ten() {
        let h = harmonic_sum(10, 20);
        let direct: f64 = (10..=20).map(|i| 1.0 / i as f64).sum();
        assert!((to_f64(&h) - direct).abs() < 1e-15);
        assert!((to_f64(&h) - 0.768_771_403_175_427_9).abs() < 1e-12);
    }
}
