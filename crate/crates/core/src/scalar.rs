//! Numeric backends.
//!
//! Every analysis routine is generic over [`Scalar`], implemented for `f64`
//! (Monte Carlo scale, comparisons within [`Scalar::tolerance`]) and for
//! [`BigRational`](num_rational::BigRational) (theorem checking with zero
//! tolerance).

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

pub use num_traits::Signed;

pub type Rational = BigRational;

/// Which backend an analysis runs in, as selected by configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NumericMode {
    Float,
    Rational,
}

pub trait Scalar:
    Signed + Clone + PartialOrd + Debug + Display + Send + Sync + 'static
{
    /// True for exact backends.
    const EXACT: bool;

    /// Slack allowed when comparing two quantities: `0` for exact backends.
    fn tolerance() -> Self;

    /// Absolute tolerance for pivoting / feasibility inside solvers.
    fn solver_eps() -> Self;

    fn from_ratio(num: i64, den: u64) -> Self;

    fn from_int(v: i64) -> Self {
        Self::from_ratio(v, 1)
    }

    /// Exact conversion from a finite float (the float's binary value, not its
    /// shortest decimal rendering). `None` for non-finite input.
    fn from_f64(x: f64) -> Option<Self>;

    fn to_f64(&self) -> f64;

    /// Parses `"3/8"`, `"-0.125"`, `"2"` or `"1e-3"`. For exact backends the
    /// decimal is interpreted exactly (`"0.1"` is one tenth).
    fn parse_literal(s: &str) -> Option<Self>;

    fn half() -> Self {
        Self::from_ratio(1, 2)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn tolerance() -> Self {
        1e-12
    }

    fn solver_eps() -> Self {
        1e-11
    }

    fn from_ratio(num: i64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64(x: f64) -> Option<Self> {
        x.is_finite().then_some(x)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn parse_literal(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: f64 = n.trim().parse().ok()?;
            let d: f64 = d.trim().parse().ok()?;
            if d == 0.0 {
                return None;
            }
            return Some(n / d);
        }
        s.parse::<f64>().ok().filter(|x| x.is_finite())
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn tolerance() -> Self {
        Rational::zero()
    }

    fn solver_eps() -> Self {
        Rational::zero()
    }

    fn from_ratio(num: i64, den: u64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(x: f64) -> Option<Self> {
        Rational::from_float(x)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn parse_literal(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n = parse_decimal(n.trim())?;
            let d = parse_decimal(d.trim())?;
            if d.is_zero() {
                return None;
            }
            return Some(n / d);
        }
        parse_decimal(s)
    }
}

/// Exact decimal parser: optional sign, digits, optional fraction, optional
/// exponent.
fn parse_decimal(s: &str) -> Option<Rational> {
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
    let all: String = format!("{int_part}{frac_part}");
    let mut numer: BigInt = all.parse().ok()?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

/// Sum without requiring `Sum` on the backend.
pub fn sum<T: Scalar>(items: impl IntoIterator<Item = T>) -> T {
    items.into_iter().fold(T::zero(), |acc, x| acc + x)
}

/// `a >= b - tol`, where `tol` is the backend tolerance.
pub fn approx_ge<T: Scalar>(a: &T, b: &T) -> bool {
    a.clone() + T::tolerance() >= *b
}

pub fn approx_eq<T: Scalar>(a: &T, b: &T) -> bool {
    (a.clone() - b.clone()).abs() <= T::tolerance()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_literals_are_exact() {
        let tenth = Rational::parse_literal("0.1").unwrap();
        assert_eq!(tenth, Rational::from_ratio(1, 10));
        assert_eq!(
            Rational::parse_literal("3/8").unwrap(),
            Rational::from_ratio(3, 8)
        );
        assert_eq!(
            Rational::parse_literal("-1.25e-1").unwrap(),
            Rational::from_ratio(-1, 8)
        );
        assert_eq!(Rational::parse_literal("2").unwrap(), Rational::from_int(2));
        assert!(Rational::parse_literal("1/0").is_none());
        assert!(Rational::parse_literal("abc").is_none());
        assert!(Rational::parse_literal(".").is_none());
    }

    #[test]
    fn float_literals() {
        assert_eq!(f64::parse_literal("3/8"), Some(0.375));
        assert_eq!(f64::parse_literal(" 0.5 "), Some(0.5));
        assert_eq!(f64::parse_literal("inf"), None);
    }

    #[test]
    fn tolerance_comparisons() {
        assert!(approx_ge(&(1.0 - 1e-13), &1.0));
        assert!(!approx_ge(&(1.0 - 1e-9), &1.0));
        let a = Rational::from_ratio(1, 3);
        assert!(approx_ge(&a, &a));
        assert!(!approx_ge(&a, &(a.clone() + Rational::from_ratio(1, 1_000_000_000))));
    }
}
