//! Exact scalars: arbitrary-precision rationals for costs and LP arithmetic,
//! and extended integers for border functions that may be unbounded.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational number, always kept in lowest terms with a positive denominator.
pub type Rational = BigRational;

pub fn rat(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn is_integral(r: &Rational) -> bool {
    r.denom().is_one()
}

/// Largest integer not exceeding `r`, as an `i64`.
pub fn floor_i64(r: &Rational) -> Option<i64> {
    r.floor().to_integer().to_i64()
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Lossless text form `p/q` used in every machine-readable output.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid rational literal `{0}`")]
pub struct ParseRationalError(pub String);

/// Accepts `p/q`, a plain integer `p`, or surrounding whitespace.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let t = s.trim();
    let err = || ParseRationalError(s.to_string());
    match t.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| err())?;
            let d: BigInt = d.trim().parse().map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            Ok(Rational::new(n, d))
        }
        None => {
            let n: BigInt = t.parse().map_err(|_| err())?;
            Ok(Rational::from_integer(n))
        }
    }
}

pub fn sum<'a>(it: impl IntoIterator<Item = &'a Rational>) -> Rational {
    it.into_iter().fold(Rational::zero(), |acc, v| acc + v)
}

/// Integer extended by the two infinities.
///
/// Lower border functions take values in `NegInf ∪ Fin`, upper border
/// functions in `Fin ∪ PosInf`; the derived ordering is
/// `NegInf < Fin(_) < PosInf`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ext {
    NegInf,
    Fin(i64),
    PosInf,
}

impl Ext {
    pub fn finite(self) -> Option<i64> {
        match self {
            Ext::Fin(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Ext::Fin(_))
    }

    /// Compare against an exact rational.
    pub fn cmp_rational(self, r: &Rational) -> Ordering {
        match self {
            Ext::NegInf => Ordering::Less,
            Ext::PosInf => Ordering::Greater,
            Ext::Fin(v) => rat(v).cmp(r),
        }
    }

    pub fn to_rational(self) -> Option<Rational> {
        self.finite().map(rat)
    }

    /// Text form used in instance files: decimal integer, `-inf` or `inf`.
    pub fn to_text(self) -> String {
        match self {
            Ext::NegInf => "-inf".to_string(),
            Ext::PosInf => "inf".to_string(),
            Ext::Fin(v) => v.to_string(),
        }
    }

    pub fn parse_text(s: &str) -> Option<Ext> {
        match s.trim() {
            "-inf" => Some(Ext::NegInf),
            "inf" | "+inf" => Some(Ext::PosInf),
            t => t.parse().ok().map(Ext::Fin),
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl From<i64> for Ext {
    fn from(v: i64) -> Self {
        Ext::Fin(v)
    }
}

impl Add for Ext {
    type Output = Ext;

    /// Panics on `NegInf + PosInf`, which no border computation produces.
    fn add(self, rhs: Ext) -> Ext {
        match (self, rhs) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a.checked_add(b).expect("border value overflow")),
            (Ext::NegInf, Ext::PosInf) | (Ext::PosInf, Ext::NegInf) => {
                panic!("undefined sum of opposite infinities")
            }
            (Ext::NegInf, _) | (_, Ext::NegInf) => Ext::NegInf,
            _ => Ext::PosInf,
        }
    }
}

impl Neg for Ext {
    type Output = Ext;
    fn neg(self) -> Ext {
        match self {
            Ext::NegInf => Ext::PosInf,
            Ext::PosInf => Ext::NegInf,
            Ext::Fin(v) => Ext::Fin(-v),
        }
    }
}

impl Sub for Ext {
    type Output = Ext;
    fn sub(self, rhs: Ext) -> Ext {
        self + (-rhs)
    }
}

impl Add<i64> for Ext {
    type Output = Ext;
    fn add(self, rhs: i64) -> Ext {
        self + Ext::Fin(rhs)
    }
}

impl Sub<i64> for Ext {
    type Output = Ext;
    fn sub(self, rhs: i64) -> Ext {
        self + Ext::Fin(-rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        let r = parse_rational("6/4").unwrap();
        assert_eq!(format_rational(&r), "3/2");
        assert_eq!(parse_rational(" 7 ").unwrap(), rat(7));
        assert_eq!(format_rational(&rat(-2)), "-2/1");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn ext_ordering_and_arithmetic() {
        assert!(Ext::NegInf < Ext::Fin(-100));
        assert!(Ext::Fin(100) < Ext::PosInf);
        assert_eq!(Ext::Fin(2) + Ext::Fin(3), Ext::Fin(5));
        assert_eq!(Ext::PosInf - 4, Ext::PosInf);
        assert_eq!(Ext::NegInf + Ext::Fin(1), Ext::NegInf);
        assert_eq!(-Ext::NegInf, Ext::PosInf);
        assert_eq!(Ext::parse_text("-inf"), Some(Ext::NegInf));
        assert_eq!(Ext::parse_text("12"), Some(Ext::Fin(12)));
        assert_eq!(Ext::Fin(3).cmp_rational(&ratio(7, 2)), Ordering::Less);
    }

    #[test]
    fn floor_of_negative_fraction() {
        assert_eq!(floor_i64(&ratio(-1, 2)), Some(-1));
        assert_eq!(floor_i64(&ratio(5, 2)), Some(2));
    }
}
