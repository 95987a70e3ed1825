//! Scalar abstractions.
//!
//! Combinatorial code (permutations, IET evaluation, Rauzy induction, the
//! visit-count oracle) only needs an ordered field, so it is written against
//! [`Length`], which is implemented for `f32`, `f64` and exact `BigRational`.
//! Geometry needs trigonometry and is written against [`Real`] (floats only).

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};

/// An ordered field usable as an interval length.
pub trait Length:
    Num + Signed + Clone + PartialOrd + Debug + ToPrimitive + FromPrimitive + Send + Sync + 'static
{
    /// Absolute tolerance below which two lengths in an interval of total
    /// length `total` are treated as equal. Zero for exact types.
    fn tie_tol(total: &Self) -> Self;

    /// Midpoint of `[a, b)`.
    fn midpoint(a: &Self, b: &Self) -> Self {
        let two = Self::one() + Self::one();
        (a.clone() + b.clone()) / two
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Length for f64 {
    fn tie_tol(total: &Self) -> Self {
        1e-12 * total.abs()
    }
}

impl Length for f32 {
    fn tie_tol(total: &Self) -> Self {
        // 1e-12 is below f32 resolution; scale to a few ulps instead.
        4.0 * f32::EPSILON * total.abs()
    }
}

impl Length for BigRational {
    fn tie_tol(_total: &Self) -> Self {
        BigRational::from_integer(BigInt::from(0))
    }
}

/// Floating point scalar for geometry.
pub trait Real: Length + Float + FloatConst + Copy + Display + Default {
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("literal fits")
    }

    /// Reduce an angle to `[-pi, pi)`.
    fn wrap_pi(x: Self) -> Self {
        let two_pi = Self::TAU();
        let y = x - two_pi * ((x + Self::PI()) / two_pi).floor();
        if y >= Self::PI() {
            y - two_pi
        } else {
            y
        }
    }

    /// Reduce an angle to `[0, 2pi)`.
    fn wrap_tau(x: Self) -> Self {
        let two_pi = Self::TAU();
        let y = x - two_pi * (x / two_pi).floor();
        if y >= two_pi {
            Self::zero()
        } else {
            y
        }
    }
}

impl Real for f64 {}
impl Real for f32 {}

/// Parse a rational such as `3/7`, `0.25` or `-2`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d == BigInt::from(0) {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = if digits.is_empty() { BigInt::from(0) } else { digits.parse().ok()? };
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(num, den);
    Some(if neg { -r } else { r })
}
