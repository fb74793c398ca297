//! Scalar abstraction shared by every algorithm in the crate.
//!
//! Two backends are provided: `f64` and [`Exact`] (arbitrary-precision
//! rationals kept in lowest terms after every operation). All algorithms are
//! written once against [`Scalar`] and run unchanged over either backend.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar.
pub type Exact = BigRational;

/// An element of an ordered field.
pub trait Scalar:
    Sized
    + Clone
    + PartialOrd
    + Debug
    + Display
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
{
    /// True for backends that never round.
    const EXACT: bool;
    /// Short backend name used in reports.
    const NAME: &'static str;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    /// Lossless conversion of a finite double (the exact backend keeps the
    /// binary fraction exactly).
    fn from_f64(v: f64) -> Option<Self>;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;
    fn is_zero(&self) -> bool;
    /// Parses a decimal literal (`1.25`, `-3`, `1e-3`) or a ratio `p/q`.
    fn parse(s: &str) -> Option<Self>;
    fn default_tolerance() -> ToleranceConfig<Self>;
    fn to_json(&self) -> serde_json::Value;

    fn from_ratio(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::ZeroDenominator);
        }
        Ok(Self::from_i64(num) / Self::from_i64(den))
    }

    fn is_negative(&self) -> bool {
        *self < Self::zero()
    }

    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

/// `num/den` in the requested backend.
pub fn scalar_from_ratio<S: Scalar>(num: i64, den: i64) -> Result<S> {
    S::from_ratio(num, den)
}

/// Comparison tolerances. Both are exactly zero for the exact backend.
#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceConfig<S> {
    pub rel_eps: S,
    pub abs_eps: S,
}

impl<S: Scalar> ToleranceConfig<S> {
    pub fn new(rel_eps: S, abs_eps: S) -> Self {
        debug_assert!(!rel_eps.is_negative() && !abs_eps.is_negative());
        Self { rel_eps, abs_eps }
    }

    pub fn exact() -> Self {
        Self {
            rel_eps: S::zero(),
            abs_eps: S::zero(),
        }
    }

    pub fn is_exact(&self) -> bool {
        self.rel_eps.is_zero() && self.abs_eps.is_zero()
    }

    /// `|a - b| <= max(abs_eps, rel_eps * max(|a|, |b|))`.
    pub fn approx_eq(&self, a: &S, b: &S) -> bool {
        let scale = a.abs().max_of(b.abs());
        self.approx_eq_scaled(a, b, &scale)
    }

    /// Like [`approx_eq`](Self::approx_eq) with an explicit magnitude for the
    /// relative term, for values obtained by cancellation of larger terms.
    pub fn approx_eq_scaled(&self, a: &S, b: &S, scale: &S) -> bool {
        if self.is_exact() {
            return a == b;
        }
        let diff = (a.clone() - b).abs();
        let bound = self.abs_eps.clone().max_of(self.rel_eps.clone() * scale);
        diff <= bound
    }

    /// `a >= b`, allowing `b` to exceed `a` by at most the tolerance.
    pub fn ge(&self, a: &S, b: &S) -> bool {
        a >= b || self.approx_eq(a, b)
    }
}

impl<S: Scalar> Default for ToleranceConfig<S> {
    fn default() -> Self {
        S::default_tolerance()
    }
}

pub fn approx_eq<S: Scalar>(a: &S, b: &S, cfg: &ToleranceConfig<S>) -> bool {
    cfg.approx_eq(a, b)
}

impl Scalar for f64 {
    const EXACT: bool = false;
    const NAME: &'static str = "float";

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: f64 = n.trim().parse().ok()?;
            let d: f64 = d.trim().parse().ok()?;
            return (d != 0.0).then(|| n / d).filter(|v| v.is_finite());
        }
        s.parse::<f64>().ok().filter(|v| v.is_finite())
    }
    fn default_tolerance() -> ToleranceConfig<Self> {
        ToleranceConfig {
            rel_eps: 1e-12,
            abs_eps: 1e-15,
        }
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::json!(*self)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    const NAME: &'static str = "exact";

    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as One>::one()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn parse(s: &str) -> Option<Self> {
        parse_exact(s.trim())
    }
    fn default_tolerance() -> ToleranceConfig<Self> {
        ToleranceConfig::exact()
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(self.to_string())
    }
}

fn parse_exact(s: &str) -> Option<BigRational> {
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if Zero::is_zero(&d) {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
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
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = all_digits.parse().ok()?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num::pow(ten, (-scale) as usize))
    };
    Some(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Exact {
        Exact::from_ratio(n, d).unwrap()
    }

    #[test]
    fn approx_eq_cases() {
        let exact0 = ToleranceConfig::<f64>::exact();
        assert!(approx_eq(&1.0, &1.0, &exact0));
        let loose = ToleranceConfig::new(1e-12, 0.0);
        assert!(approx_eq(&1.0, &(1.0 + 1e-14), &loose));
        assert!(!approx_eq(&1.0, &(1.0 + 1e-9), &loose));
        let third = q(1, 3);
        let approx = Exact::parse("0.3333").unwrap();
        assert!(!approx_eq(&third, &approx, &ToleranceConfig::exact()));
    }

    #[test]
    fn ratios() {
        assert_eq!(scalar_from_ratio::<f64>(1, 2).unwrap(), 0.5);
        assert_eq!(q(2, 4), q(1, 2));
        assert_eq!(q(2, 4).denom(), &BigInt::from(2));
        assert_eq!(q(-3, 1), Exact::from_i64(-3));
        assert!(matches!(
            scalar_from_ratio::<Exact>(1, 0),
            Err(Error::ZeroDenominator)
        ));
        assert!(scalar_from_ratio::<f64>(1, 0).is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!(Exact::parse("1/3"), Some(q(1, 3)));
        assert_eq!(Exact::parse("1.5"), Some(q(3, 2)));
        assert_eq!(Exact::parse("-2.25e1"), Some(q(-45, 2)));
        assert_eq!(Exact::parse(".5"), Some(q(1, 2)));
        assert_eq!(Exact::parse("abc"), None);
        assert_eq!(Exact::parse("1/0"), None);
        assert_eq!(f64::parse("2/8"), Some(0.25));
        assert_eq!(f64::parse("nan"), None);
        assert_eq!(Exact::parse("7").unwrap().to_string(), "7");
    }

    #[test]
    fn from_f64_is_lossless() {
        let v = Exact::from_f64(0.1).unwrap();
        assert_eq!(Scalar::to_f64(&v), 0.1);
        assert_ne!(v, q(1, 10));
    }

    proptest::proptest! {
        #[test]
        fn exact_division_round_trips(a in -1000i64..1000, b in 1i64..1000, c in -1000i64..1000, d in 1i64..1000) {
            let x = q(a, b);
            let y = q(c, d);
            if !Scalar::is_zero(&y) {
                proptest::prop_assert_eq!((x.clone() / &y) * &y, x);
            }
        }

        #[test]
        fn order_is_compatible(a in -1000i64..1000, b in -1000i64..1000, c in -1000i64..1000, k in 1i64..50) {
            let (x, y, z) = (q(a, 7), q(b, 7), q(c, 3));
            if x < y {
                proptest::prop_assert!(x.clone() + &z < y.clone() + &z);
                proptest::prop_assert!(x * &q(k, 5) < y * &q(k, 5));
            }
        }
    }
}
