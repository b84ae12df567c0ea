//! Exact rationals and the 128-bit reals used for logarithmic comparisons.
//!
//! Every partition function in this crate is a [`Rational`]. Quantities that
//! are logarithms or exponentials of rationals (log Ξ, ᾱ, KP tail bounds) are
//! carried as [`Real`] values at [`REAL_PRECISION`] bits.

use std::fmt;
use std::str::FromStr;

use dashu::base::{Abs, Sign};
use dashu::float::round::mode::HalfEven;
use dashu::float::FBig;
use dashu::integer::{IBig, UBig};
use dashu::rational::RBig;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision exact rational.
pub type Rational = RBig;

/// Binary floating point with explicit precision.
pub type Real = FBig<HalfEven, 2>;

/// Working precision (bits) for every [`Real`] produced by this crate.
pub const REAL_PRECISION: usize = 128;

/// Slack used when an inequality between two [`Real`]s is asserted: 2^-64.
pub fn comparison_slack() -> Real {
    real_from_rational(&Rational::from_parts(
        IBig::ONE,
        UBig::ONE << 64,
    ))
}

pub fn int(v: i64) -> Rational {
    Rational::from(v)
}

pub fn ratio(num: i64, den: u64) -> Rational {
    Rational::from_parts(IBig::from(num), UBig::from(den))
}

/// Parse `"n/d"` or a bare integer `"n"`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::Parse(format!("malformed rational {text:?}"));
    match t.split_once('/') {
        Some((n, d)) => {
            let n = IBig::from_str(n.trim()).map_err(|_| bad())?;
            let d = UBig::from_str(d.trim()).map_err(|_| bad())?;
            if d == UBig::ZERO {
                return Err(bad());
            }
            Ok(Rational::from_parts(n, d))
        }
        None => Ok(Rational::from(IBig::from_str(t).map_err(|_| bad())?)),
    }
}

/// Canonical `"numerator/denominator"` text, denominators always present.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numerator(), r.denominator())
}

pub fn sum<I: IntoIterator<Item = Rational>>(items: I) -> Rational {
    items.into_iter().fold(Rational::ZERO, |acc, x| acc + x)
}

pub fn product<I: IntoIterator<Item = Rational>>(items: I) -> Rational {
    items.into_iter().fold(Rational::ONE, |acc, x| acc * x)
}

pub fn pow(base: &Rational, exp: usize) -> Rational {
    base.clone().pow(exp)
}

pub fn binomial(n: u64, k: u64) -> Rational {
    if k > n {
        return Rational::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = UBig::ONE;
    for i in 0..k {
        acc = acc * UBig::from(n - i) / UBig::from(i + 1);
    }
    Rational::from(acc)
}

pub fn real(v: i64) -> Real {
    Real::from(v).with_precision(REAL_PRECISION).value()
}

pub fn real_from_rational(r: &Rational) -> Real {
    let num = Real::from(r.numerator().clone())
        .with_precision(REAL_PRECISION)
        .value();
    let den = Real::from(IBig::from(r.denominator().clone()))
        .with_precision(REAL_PRECISION)
        .value();
    num / den
}

pub fn real_from_f64(v: f64) -> Real {
    Real::try_from(v)
        .expect("finite f64")
        .with_precision(REAL_PRECISION)
        .value()
}

/// Natural logarithm of a positive rational.
pub fn ln_rational(r: &Rational) -> Result<Real> {
    if r.sign() != Sign::Positive || *r == Rational::ZERO {
        return Err(Error::Domain(format!(
            "logarithm of non-positive value {}",
            format_rational(r)
        )));
    }
    Ok(real_from_rational(r).ln())
}

pub fn ln_real(x: &Real) -> Real {
    x.ln()
}

pub fn exp_real(x: &Real) -> Real {
    x.exp()
}

pub fn abs_real(x: Real) -> Real {
    x.abs()
}

pub fn to_f64(x: &Real) -> f64 {
    x.to_f64().value()
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().value()
}

/// Decimal rendering with roughly 38 significant digits.
pub fn format_real(x: &Real) -> String {
    format!("{}", x.clone().to_decimal().value())
}

/// Serde adapter emitting rationals as `"n/d"` strings.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter emitting [`Real`]s as decimal strings.
pub mod serde_real {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Real, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_real(x))
    }
}

/// Wrapper that prints a rational in canonical `n/d` form.
#[derive(Clone, PartialEq, Eq)]
pub struct Exact(pub Rational);

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl fmt::Debug for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serde_rational::serialize(&self.0, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(format_rational(&parse_rational("6/4").unwrap()), "3/2");
        assert_eq!(format_rational(&parse_rational("7").unwrap()), "7/1");
        assert_eq!(format_rational(&parse_rational("-1/2").unwrap()), "-1/2");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x/2").is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), int(10));
        assert_eq!(binomial(5, 0), int(1));
        assert_eq!(binomial(3, 5), int(0));
        assert_eq!(binomial(20, 10), int(184756));
    }

    #[test]
    fn logarithm_matches_f64() {
        let l = ln_rational(&ratio(161, 16)).unwrap();
        assert!((to_f64(&l) - (161f64 / 16.0).ln()).abs() < 1e-14);
        assert!(ln_rational(&int(0)).is_err());
    }
}
