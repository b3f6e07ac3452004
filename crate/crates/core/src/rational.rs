//! Exact rational helpers shared by every module.
//!
//! All semantic arithmetic in the crate goes through [`Rational`]. On the wire
//! rationals are always written as `"p/q"` strings so that no precision is
//! lost; parsing also accepts a bare integer.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn frac(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// `2^-k`.
pub fn pow2_inv(k: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << k as usize)
}

pub fn format(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse(s: &str) -> Result<Rational, Error> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p: BigInt = p.parse().map_err(|_| bad())?;
    let q: BigInt = q.parse().map_err(|_| bad())?;
    if q.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(p, q))
}

/// Display-only decimal rendering. Never feed this back into a computation.
pub fn to_decimal(r: &Rational) -> String {
    match r.to_f64() {
        Some(x) => format!("{x:.12}"),
        None => "nan".to_string(),
    }
}

/// Sums many rationals with few distinct denominators without reducing at
/// every step.
#[derive(Clone, Debug, Default)]
pub struct Accumulator {
    parts: Vec<(BigInt, BigInt)>,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, r: &Rational) {
        if r.is_zero() {
            return;
        }
        match self.parts.iter_mut().find(|(q, _)| q == r.denom()) {
            Some((_, p)) => *p += r.numer(),
            None => self.parts.push((r.denom().clone(), r.numer().clone())),
        }
    }

    pub fn finish(self) -> Rational {
        let mut lcm = BigInt::one();
        for (q, _) in &self.parts {
            lcm = lcm.lcm(q);
        }
        let mut num = BigInt::zero();
        for (q, p) in self.parts {
            num += p * (&lcm / q);
        }
        Rational::new(num, lcm)
    }
}

pub fn sum<'a>(items: impl IntoIterator<Item = &'a Rational>) -> Rational {
    let mut acc = Accumulator::new();
    for r in items {
        acc.add(r);
    }
    acc.finish()
}

pub fn abs_sum<'a>(items: impl IntoIterator<Item = &'a Rational>) -> Rational {
    let mut acc = Accumulator::new();
    for r in items {
        acc.add(&r.abs());
    }
    acc.finish()
}

/// Serde adapter writing a [`Rational`] as a `"p/q"` string.
pub mod serde_str {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        super::parse(&s).map_err(serde::de::Error::custom)
    }
}

pub mod serde_opt_str {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&super::format(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let s = Option::<String>::deserialize(d)?;
        s.map(|s| super::parse(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse("-3/8").unwrap(), frac(-3, 8));
        assert_eq!(parse("6/4").unwrap(), frac(3, 2));
        assert_eq!(parse("7").unwrap(), int(7));
        assert_eq!(format(&int(1)), "1/1");
        assert_eq!(format(&frac(-2, 6)), "-1/3");
        assert!(parse("1/0").is_err());
        assert!(parse("x").is_err());
    }

    #[test]
    fn accumulator_matches_naive_sum() {
        let xs = [frac(1, 6), frac(-1, 2), frac(1, 6), frac(3, 4), frac(-5, 12)];
        let naive = xs.iter().fold(Rational::zero(), |a, b| a + b);
        assert_eq!(sum(&xs), naive);
        assert_eq!(abs_sum(&xs), xs.iter().fold(Rational::zero(), |a, b| a + b.abs()));
        assert_eq!(sum(&[]), Rational::zero());
    }
}
