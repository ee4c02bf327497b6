//! Outward-rounded interval arithmetic.
//!
//! Rounding mode: endpoints are computed in round-to-nearest and moved one
//! ulp outward (`next_down` on lower endpoints, `next_up` on upper ones)
//! unless an error-free transformation (TwoSum, FMA residual) shows the
//! rounded value already lies on the correct side of the exact result.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum IntervalError {
    #[error("interval endpoint is NaN")]
    NaN,
    #[error("lower endpoint {lo} exceeds upper endpoint {hi}")]
    Inverted { lo: f64, hi: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("interval Newton failed to contract after {iterations} iterations")]
    NoContraction { iterations: usize },
    #[error("cannot parse interval from {0:?}")]
    Parse(String),
}

#[inline]
fn down(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        x
    } else {
        x.next_down()
    }
}

#[inline]
fn up(x: f64) -> f64 {
    if x == f64::INFINITY {
        x
    } else {
        x.next_up()
    }
}

#[inline]
fn add_dn(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return down(s);
    }
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    if e < 0.0 { s.next_down() } else { s }
}

#[inline]
fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return up(s);
    }
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    if e > 0.0 { s.next_up() } else { s }
}

const TINY: f64 = 1e-290;

/// Sign of `exact - rounded` for a product, `None` when the residual may be inexact.
#[inline]
fn mul_err(a: f64, b: f64, p: f64) -> Option<f64> {
    if !p.is_finite() || (p.abs() < TINY && a != 0.0 && b != 0.0) {
        None
    } else {
        Some(a.mul_add(b, -p))
    }
}

#[inline]
fn mul_dn(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    match mul_err(a, b, p) {
        Some(e) if e >= 0.0 => p,
        _ => down(p),
    }
}

#[inline]
fn mul_up(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    match mul_err(a, b, p) {
        Some(e) if e <= 0.0 => p,
        _ => up(p),
    }
}

/// Sign of `a/b - q`, `None` when not certain.
#[inline]
fn div_err(a: f64, b: f64, q: f64) -> Option<f64> {
    if !q.is_finite() || !b.is_finite() || q.abs() < TINY || a.abs() < TINY {
        None
    } else {
        let r = (-q).mul_add(b, a);
        Some(if b > 0.0 { r } else { -r })
    }
}

#[inline]
fn div_dn(a: f64, b: f64) -> f64 {
    let q = a / b;
    if q == 0.0 && a == 0.0 {
        return 0.0;
    }
    match div_err(a, b, q) {
        Some(e) if e >= 0.0 => q,
        _ => down(q),
    }
}

#[inline]
fn div_up(a: f64, b: f64) -> f64 {
    let q = a / b;
    if q == 0.0 && a == 0.0 {
        return 0.0;
    }
    match div_err(a, b, q) {
        Some(e) if e <= 0.0 => q,
        _ => up(q),
    }
}

/// Closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = IntervalError;
    fn try_from(v: [f64; 2]) -> Result<Self, Self::Error> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(x: Interval) -> Self {
        [x.lo, x.hi]
    }
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo.is_nan() || hi.is_nan() {
            return Err(IntervalError::NaN);
        }
        if lo > hi {
            return Err(IntervalError::Inverted { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    /// Builds an interval from endpoints known to be valid. Panics on NaN or
    /// inverted endpoints; use [`Interval::new`] for untrusted input.
    #[inline]
    pub fn from_bounds(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "invalid interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    #[inline]
    pub fn point(x: f64) -> Self {
        assert!(!x.is_nan(), "NaN point interval");
        Interval { lo: x, hi: x }
    }

    /// `[-r, r]`.
    #[inline]
    pub fn symmetric(r: f64) -> Self {
        let r = r.abs();
        Interval { lo: -r, hi: r }
    }

    /// `[mid - rad, mid + rad]` rounded outward.
    pub fn mid_rad(mid: f64, rad: f64) -> Self {
        let rad = rad.abs();
        Interval { lo: down(mid - rad), hi: up(mid + rad) }
    }

    #[inline]
    fn raw(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "raw interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }
    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn mid(&self) -> f64 {
        if self.lo == self.hi {
            return self.lo;
        }
        let m = 0.5 * self.lo + 0.5 * self.hi;
        m.clamp(self.lo, self.hi)
    }

    /// Upper bound on the radius about [`Interval::mid`].
    pub fn rad(&self) -> f64 {
        let m = self.mid();
        up((m - self.lo).max(self.hi - m))
    }

    /// Upper bound on `hi - lo`.
    pub fn width(&self) -> f64 {
        up(self.hi - self.lo)
    }

    /// Upper bound on `max |x|`.
    #[inline]
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Lower bound on `min |x|`.
    pub fn mig(&self) -> f64 {
        if self.contains_zero() {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    #[inline]
    pub fn contains_zero(&self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }

    pub fn subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn interior_of(&self, other: &Interval) -> bool {
        other.lo < self.lo && self.hi < other.hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    /// `|x|` as an interval.
    pub fn abs(&self) -> Interval {
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            Interval { lo: -self.hi, hi: -self.lo }
        } else {
            Interval { lo: 0.0, hi: self.mag() }
        }
    }

    /// Widens by `r` on both sides.
    pub fn inflate(&self, r: f64) -> Interval {
        let r = r.abs();
        Interval { lo: down(self.lo - r), hi: up(self.hi + r) }
    }

    pub fn is_positive(&self) -> bool {
        self.lo > 0.0
    }

    pub fn is_negative(&self) -> bool {
        self.hi < 0.0
    }

    pub fn recip(&self) -> Result<Interval, IntervalError> {
        Interval::ONE.checked_div(*self)
    }

    pub fn checked_div(self, rhs: Interval) -> Result<Interval, IntervalError> {
        if rhs.contains_zero() {
            return Err(IntervalError::Domain(format!("division by {rhs}, which contains 0")));
        }
        let (a, b) = (self, rhs);
        let lo = div_dn(a.lo, b.lo).min(div_dn(a.lo, b.hi)).min(div_dn(a.hi, b.lo)).min(div_dn(a.hi, b.hi));
        let hi = div_up(a.lo, b.lo).max(div_up(a.lo, b.hi)).max(div_up(a.hi, b.lo)).max(div_up(a.hi, b.hi));
        Ok(Interval::raw(lo, hi))
    }

    pub fn sqr(&self) -> Interval {
        self.int_pow(2)
    }

    /// `x^k`, monotone by cases; even powers never go below zero.
    pub fn int_pow(&self, k: u32) -> Interval {
        match k {
            0 => Interval::ONE,
            1 => *self,
            _ => {
                let (lo_pow, hi_pow) = (pow_down(self.lo.abs(), k), pow_up(self.lo.abs(), k));
                let (lo_pow_h, hi_pow_h) = (pow_down(self.hi.abs(), k), pow_up(self.hi.abs(), k));
                if k % 2 == 1 {
                    // odd power is monotone increasing
                    let lo = if self.lo >= 0.0 { lo_pow } else { -hi_pow };
                    let hi = if self.hi >= 0.0 { hi_pow_h } else { -lo_pow_h };
                    Interval::raw(lo, hi)
                } else if self.lo >= 0.0 {
                    Interval::raw(lo_pow, hi_pow_h)
                } else if self.hi <= 0.0 {
                    Interval::raw(lo_pow_h, hi_pow)
                } else {
                    Interval::raw(0.0, hi_pow.max(hi_pow_h))
                }
            }
        }
    }

    /// Square root; the argument must be nonnegative.
    pub fn sqrt(&self) -> Result<Interval, IntervalError> {
        if self.lo < 0.0 {
            return Err(IntervalError::Domain(format!("sqrt of {self}")));
        }
        let sl = self.lo.sqrt();
        let lo = if (-sl).mul_add(sl, self.lo) >= 0.0 { sl } else { down(sl).max(0.0) };
        let sh = self.hi.sqrt();
        let hi = if sh.is_finite() && (-sh).mul_add(sh, self.hi) <= 0.0 { sh } else { up(sh) };
        Ok(Interval::raw(lo, hi))
    }

    /// Fused `self + a * b`.
    #[inline]
    pub fn add_mul(self, a: Interval, b: Interval) -> Interval {
        self + a * b
    }

    /// `self * s` for a float scalar.
    #[inline]
    pub fn scale(self, s: f64) -> Interval {
        if s >= 0.0 {
            Interval::raw(mul_dn(self.lo, s), mul_up(self.hi, s))
        } else {
            Interval::raw(mul_dn(self.hi, s), mul_up(self.lo, s))
        }
    }
}

/// Lower bound of `x^k` for `x >= 0` (each multiplication rounded down).
fn pow_down(x: f64, k: u32) -> f64 {
    let mut acc = 1.0f64;
    for _ in 0..k {
        acc = mul_dn(acc, x).max(0.0);
    }
    acc
}

/// Upper bound of `x^k` for `x >= 0`.
fn pow_up(x: f64, k: u32) -> f64 {
    let mut acc = 1.0f64;
    for _ in 0..k {
        acc = mul_up(acc, x);
    }
    acc
}

impl Add for Interval {
    type Output = Interval;
    #[inline]
    fn add(self, rhs: Interval) -> Interval {
        Interval::raw(add_dn(self.lo, rhs.lo), add_up(self.hi, rhs.hi))
    }
}

impl Sub for Interval {
    type Output = Interval;
    #[inline]
    fn sub(self, rhs: Interval) -> Interval {
        Interval::raw(add_dn(self.lo, -rhs.hi), add_up(self.hi, -rhs.lo))
    }
}

impl Mul for Interval {
    type Output = Interval;
    #[inline]
    fn mul(self, rhs: Interval) -> Interval {
        let (a, b) = (self, rhs);
        if a.lo >= 0.0 && b.lo >= 0.0 {
            return Interval::raw(mul_dn(a.lo, b.lo), mul_up(a.hi, b.hi));
        }
        if a.lo == a.hi && b.lo == b.hi {
            return Interval::raw(mul_dn(a.lo, b.lo), mul_up(a.lo, b.lo));
        }
        let lo = mul_dn(a.lo, b.lo).min(mul_dn(a.lo, b.hi)).min(mul_dn(a.hi, b.lo)).min(mul_dn(a.hi, b.hi));
        let hi = mul_up(a.lo, b.lo).max(mul_up(a.lo, b.hi)).max(mul_up(a.hi, b.lo)).max(mul_up(a.hi, b.hi));
        Interval::raw(lo, hi)
    }
}

/// Panics when the divisor contains zero; use [`Interval::checked_div`] to
/// get a `DomainError` instead.
impl Div for Interval {
    type Output = Interval;
    fn div(self, rhs: Interval) -> Interval {
        self.checked_div(rhs).expect("interval division by zero-containing interval")
    }
}

impl Neg for Interval {
    type Output = Interval;
    #[inline]
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Add<f64> for Interval {
    type Output = Interval;
    fn add(self, rhs: f64) -> Interval {
        self + Interval::point(rhs)
    }
}

impl Sub<f64> for Interval {
    type Output = Interval;
    fn sub(self, rhs: f64) -> Interval {
        self - Interval::point(rhs)
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    #[inline]
    fn mul(self, rhs: f64) -> Interval {
        self.scale(rhs)
    }
}

impl AddAssign for Interval {
    #[inline]
    fn add_assign(&mut self, rhs: Interval) {
        *self = *self + rhs;
    }
}

impl SubAssign for Interval {
    #[inline]
    fn sub_assign(&mut self, rhs: Interval) {
        *self = *self - rhs;
    }
}

impl MulAssign for Interval {
    #[inline]
    fn mul_assign(&mut self, rhs: Interval) {
        *self = *self * rhs;
    }
}

impl std::iter::Sum for Interval {
    fn sum<I: Iterator<Item = Interval>>(iter: I) -> Interval {
        iter.fold(Interval::ZERO, |a, b| a + b)
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.16e}, {:.16e}]", self.lo, self.hi)
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Interval {
    type Err = IntervalError;
    /// Parses `"[lo, hi]"` or a single number. Decimal endpoints are widened
    /// by one ulp so the result contains the decimal value even when it is not
    /// representable.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let bad = || IntervalError::Parse(s.to_string());
        if let Some(inner) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let mut parts = inner.split(',');
            let lo: f64 = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
            let hi: f64 = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
            if parts.next().is_some() {
                return Err(bad());
            }
            Interval::new(lo, hi)?;
            Ok(Interval::raw(down(lo), up(hi)))
        } else {
            let x: f64 = t.parse().map_err(|_| bad())?;
            Interval::new(x, x)?;
            Ok(Interval::raw(down(x), up(x)))
        }
    }
}

/// Scalar interval Newton: `N(X) = m - f(m)/f'(X)` intersected with `X`.
///
/// Preconditions checked: a sign change of `f` over the bracket and
/// `0 ∉ f'(bracket)`. Iterates until the width is at most `tol` or the
/// iterate stops shrinking, returning the enclosure of the unique zero.
pub fn interval_newton_scalar<F, D>(
    f: F,
    df: D,
    bracket: Interval,
    tol: f64,
) -> Result<Interval, IntervalError>
where
    F: Fn(Interval) -> Interval,
    D: Fn(Interval) -> Interval,
{
    const MAX_ITER: usize = 100;
    let d = df(bracket);
    if d.contains_zero() {
        return Err(IntervalError::NoContraction { iterations: 0 });
    }
    let fl = f(Interval::point(bracket.lo));
    let fh = f(Interval::point(bracket.hi));
    if !((fl.hi < 0.0 && fh.lo > 0.0) || (fl.lo > 0.0 && fh.hi < 0.0)) {
        return Err(IntervalError::Domain(format!(
            "no verified sign change of f on {bracket}: f(lo)={fl}, f(hi)={fh}"
        )));
    }
    let mut x = bracket;
    for _ in 0..MAX_ITER {
        let m = Interval::point(x.mid());
        let d = df(x);
        if d.contains_zero() {
            return Err(IntervalError::NoContraction { iterations: MAX_ITER });
        }
        let n = m - f(m) / d;
        let next = match n.intersect(&x) {
            Some(v) => v,
            None => return Err(IntervalError::NoContraction { iterations: MAX_ITER }),
        };
        let done = next.width() <= tol || next == x;
        x = next;
        if done {
            return Ok(x);
        }
    }
    if x.width() <= tol {
        Ok(x)
    } else {
        Err(IntervalError::NoContraction { iterations: MAX_ITER })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn endpoint_arithmetic() {
        let s = iv(1.0, 2.0) + iv(3.0, 4.0);
        assert!(s.contains(4.0) && s.contains(6.0));
        assert!(s.lo() > 3.99 && s.hi() < 6.01);
        let p = iv(-1.0, 2.0) * iv(-1.0, 2.0);
        assert!(p.contains(-2.0) && p.contains(4.0));
        assert!(p.lo() > -2.01 && p.hi() < 4.01);
    }

    #[test]
    fn zero_times_unbounded_is_zero() {
        let big = Interval { lo: 1.0, hi: f64::INFINITY };
        assert_eq!(Interval::ZERO * big, Interval::ZERO);
        let p = iv(0.0, 1.0) * big;
        assert_eq!(p.lo(), 0.0);
        assert_eq!(p.hi(), f64::INFINITY);
    }

    #[test]
    fn third_is_tight() {
        let t = iv(1.0, 1.0) / iv(3.0, 3.0);
        // 1/3 lies strictly between two adjacent doubles
        let near = 1.0f64 / 3.0;
        assert!(t.contains(near));
        assert!(t.lo() < near || t.hi() > near);
        let ulps = (t.hi().to_bits() - t.lo().to_bits()) as u64;
        assert!(ulps <= 2, "width {ulps} ulp");
        // exact rational check: 3*lo < 1 < 3*hi
        assert!(3.0 * t.lo() <= 1.0 && 3.0 * t.hi() >= 1.0);
    }

    #[test]
    fn division_by_zero_interval() {
        assert!(matches!(iv(1.0, 1.0).checked_div(iv(-1.0, 1.0)), Err(IntervalError::Domain(_))));
    }

    #[test]
    fn rejects_nan_and_inverted() {
        assert_eq!(Interval::new(f64::NAN, 1.0), Err(IntervalError::NaN));
        assert!(matches!(Interval::new(2.0, 1.0), Err(IntervalError::Inverted { .. })));
    }

    #[test]
    fn pow_cases() {
        assert_eq!(iv(-2.0, 1.0).int_pow(2).lo(), 0.0);
        assert!(iv(-2.0, 1.0).int_pow(2).contains(4.0));
        assert_eq!(iv(3.0, 7.0).int_pow(0), Interval::ONE);
        // 1.1^8 = 2.14358881 exactly in decimal
        let p = Interval::from_str("1.1").unwrap().int_pow(8);
        assert!(p.contains(2.14358881));
        assert!(p.width() < 1e-14);
        let odd = iv(-2.0, 3.0).int_pow(3);
        assert!(odd.contains(-8.0) && odd.contains(27.0));
        let neg = iv(-3.0, -2.0).int_pow(2);
        assert!(neg.contains(4.0) && neg.contains(9.0) && neg.lo() > 3.9);
    }

    #[test]
    fn pow_not_wider_than_chain() {
        let a = iv(-0.7, 1.3);
        let chain = a * a * a * a;
        let p = a.int_pow(4);
        assert!(p.lo() >= chain.lo() && p.hi() <= chain.hi() * (1.0 + 1e-15));
    }

    #[test]
    fn newton_examples() {
        let r = interval_newton_scalar(
            |k| k * k - k,
            |k| k * 2.0 - 1.0,
            iv(0.75, 1.5),
            1e-14,
        )
        .unwrap();
        assert!(r.contains(1.0));
        let r = interval_newton_scalar(
            |k| k.int_pow(4) - k.int_pow(3) - 1.0,
            |k| k.int_pow(3) * 4.0 - k.int_pow(2) * 3.0,
            iv(1.3, 1.5),
            1e-13,
        )
        .unwrap();
        // bisection oracle
        let (mut a, mut b) = (1.0f64, 2.0f64);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if m.powi(4) - m.powi(3) - 1.0 > 0.0 {
                b = m
            } else {
                a = m
            }
        }
        assert!(r.contains(a) || (r.lo() - a).abs() < 1e-15);
        assert!((r.mid() - 1.3802775690976141).abs() < 1e-12);
        assert!(r.width() <= 1e-13);
        let err = interval_newton_scalar(|k| k * k - 0.25, |k| k * 2.0, iv(-1.0, 1.0), 1e-12);
        assert!(matches!(err, Err(IntervalError::NoContraction { .. })));
    }

    #[test]
    fn text_round_trip() {
        let x = iv(-0.1, 0.30000000000000004);
        let y: Interval = x.to_string().parse().unwrap();
        assert!(x.subset_of(&y));
        let z: Interval = "0.1".parse().unwrap();
        assert!(z.lo() < 0.1 && z.hi() > 0.1);
        assert!("[1, 0]".parse::<Interval>().is_err());
        assert!("nonsense".parse::<Interval>().is_err());
    }

    #[test]
    fn sqrt_contains() {
        let s = iv(2.0, 2.0).sqrt().unwrap();
        assert!(s.contains(std::f64::consts::SQRT_2));
        assert!(iv(-1.0, 1.0).sqrt().is_err());
    }
}
