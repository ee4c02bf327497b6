//! Exact multivariate polynomials with rational coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::interval::Interval;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PolyError {
    #[error("cannot parse {0:?} as a rational number")]
    Number(String),
    #[error("cannot parse monomial {0:?}")]
    Monomial(String),
    #[error("variable count mismatch: {0} vs {1}")]
    Arity(usize, usize),
}

/// Polynomial in `n` variables, stored as exponent vector -> coefficient.
#[derive(Clone, PartialEq, Eq)]
pub struct Poly {
    n: usize,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

/// Parses `"3"`, `"-7/4"`, `"0.02"`, `"1e-3"` exactly.
pub fn parse_rational(s: &str) -> Result<BigRational, PolyError> {
    let t = s.trim();
    let bad = || PolyError::Number(s.to_string());
    if let Some((a, b)) = t.split_once('/') {
        let num: BigInt = a.trim().parse().map_err(|_| bad())?;
        let den: BigInt = b.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int_part}{frac_part}0").parse::<BigInt>().map_err(|_| bad())? / 10;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Smallest interval with double endpoints containing `q`.
pub fn rational_to_interval(q: &BigRational) -> Interval {
    let f = q.to_f64().unwrap_or(f64::NAN);
    if !f.is_finite() {
        return if q.is_negative() {
            Interval::from_bounds(f64::NEG_INFINITY, -f64::MAX)
        } else {
            Interval::from_bounds(f64::MAX, f64::INFINITY)
        };
    }
    match BigRational::from_float(f) {
        Some(fr) if &fr == q => Interval::point(f),
        Some(fr) if &fr < q => Interval::from_bounds(f, f.next_up()),
        _ => Interval::from_bounds(f.next_down(), f),
    }
}

impl Poly {
    pub fn zero(n: usize) -> Poly {
        Poly { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: BigRational) -> Poly {
        let mut p = Poly::zero(n);
        p.add_term(vec![0; n], c);
        p
    }

    pub fn from_int(n: usize, c: i64) -> Poly {
        Poly::constant(n, BigRational::from_integer(c.into()))
    }

    pub fn var(n: usize, i: usize) -> Poly {
        let mut e = vec![0; n];
        e[i] = 1;
        let mut p = Poly::zero(n);
        p.add_term(e, BigRational::one());
        p
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &[u32]) -> BigRational {
        self.terms.get(e).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add_term(&mut self, e: Vec<u32>, c: BigRational) {
        assert_eq!(e.len(), self.n);
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn add(&self, o: &Poly) -> Poly {
        assert_eq!(self.n, o.n);
        let mut r = self.clone();
        for (e, c) in &o.terms {
            r.add_term(e.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Poly {
        self.scale(&-BigRational::one())
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        let mut r = Poly::zero(self.n);
        if c.is_zero() {
            return r;
        }
        for (e, v) in &self.terms {
            r.terms.insert(e.clone(), v * c);
        }
        r
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        assert_eq!(self.n, o.n);
        let mut r = Poly::zero(self.n);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                r.add_term(e, ca * cb);
            }
        }
        r
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut r = Poly::from_int(self.n, 1);
        for _ in 0..k {
            r = r.mul(self);
        }
        r
    }

    /// `∂/∂x_i`.
    pub fn deriv(&self, i: usize) -> Poly {
        let mut r = Poly::zero(self.n);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut f = e.clone();
                f[i] -= 1;
                r.add_term(f, c * BigRational::from_integer(e[i].into()));
            }
        }
        r
    }

    /// Substitutes polynomials (all in the same `m` variables) for the variables.
    pub fn compose(&self, args: &[Poly]) -> Poly {
        assert_eq!(args.len(), self.n);
        let m = args[0].n;
        let mut r = Poly::zero(m);
        for (e, c) in &self.terms {
            let mut t = Poly::constant(m, c.clone());
            for (k, &p) in e.iter().enumerate() {
                if p > 0 {
                    t = t.mul(&args[k].pow(p));
                }
            }
            r = r.add(&t);
        }
        r
    }

    /// Same polynomial with every coefficient replaced by its absolute value.
    pub fn abs_coeffs(&self) -> Poly {
        Poly { n: self.n, terms: self.terms.iter().map(|(e, c)| (e.clone(), c.abs())).collect() }
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut t = c.to_f64().unwrap_or(f64::NAN);
                for (k, &p) in e.iter().enumerate() {
                    t *= x[k].powi(p as i32);
                }
                t
            })
            .sum()
    }

    pub fn eval_interval(&self, x: &[Interval]) -> Interval {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut t = rational_to_interval(c);
                for (k, &p) in e.iter().enumerate() {
                    if p > 0 {
                        t *= x[k].int_pow(p);
                    }
                }
                t
            })
            .sum()
    }

    pub fn eval_rational(&self, x: &[BigRational]) -> BigRational {
        let mut s = BigRational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (k, &p) in e.iter().enumerate() {
                for _ in 0..p {
                    t *= &x[k];
                }
            }
            s += t;
        }
        s
    }

    /// Terms as (interval coefficient, exponent).
    pub fn interval_terms(&self) -> Vec<(Interval, Vec<u32>)> {
        self.terms.iter().map(|(e, c)| (rational_to_interval(c), e.clone())).collect()
    }

    /// Parses a sum of monomials such as `"3/4*x1^2*x2 - x3 + 1/2"`.
    pub fn parse(n: usize, s: &str) -> Result<Poly, PolyError> {
        let mut p = Poly::zero(n);
        let cleaned: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if cleaned.is_empty() || cleaned == "0" {
            return Ok(p);
        }
        let mut pieces = Vec::new();
        let mut cur = String::new();
        let chars: Vec<char> = cleaned.chars().collect();
        for (i, &ch) in chars.iter().enumerate() {
            let after_exp = i > 0 && matches!(chars[i - 1], 'e' | 'E') && i > 1 && chars[i - 2].is_ascii_digit();
            if (ch == '+' || ch == '-') && i > 0 && chars[i - 1] != '^' && !after_exp {
                pieces.push(std::mem::take(&mut cur));
            }
            cur.push(ch);
        }
        pieces.push(cur);
        for piece in pieces {
            let (sign, body) = match piece.strip_prefix('-') {
                Some(b) => (-BigRational::one(), b.to_string()),
                None => (BigRational::one(), piece.strip_prefix('+').unwrap_or(&piece).to_string()),
            };
            let mut coef = sign;
            let mut e = vec![0u32; n];
            for factor in body.split('*') {
                if let Some(v) = factor.strip_prefix('x') {
                    let (idx, pw) = match v.split_once('^') {
                        Some((i, k)) => (i, k.parse::<u32>().map_err(|_| PolyError::Monomial(piece.clone()))?),
                        None => (v, 1),
                    };
                    let idx: usize = idx.parse().map_err(|_| PolyError::Monomial(piece.clone()))?;
                    if idx == 0 || idx > n {
                        return Err(PolyError::Monomial(piece.clone()));
                    }
                    e[idx - 1] += pw;
                } else {
                    coef *= parse_rational(factor)?;
                }
            }
            p.add_term(e, coef);
        }
        Ok(p)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            let a = c.abs();
            let mut parts = Vec::new();
            if !a.is_one() || e.iter().all(|&p| p == 0) {
                parts.push(a.to_string());
            }
            for (i, &p) in e.iter().enumerate() {
                match p {
                    0 => {}
                    1 => parts.push(format!("x{}", i + 1)),
                    _ => parts.push(format!("x{}^{}", i + 1, p)),
                }
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
