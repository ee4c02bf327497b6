//! Multivariate Taylor series over multi-indices with interval coefficients.
//!
//! Coefficients are stored densely in graded-lexicographic order: all indices
//! of total degree 0, then degree 1, and so on; inside a degree, indices are
//! sorted lexicographically decreasing (`(2,0), (1,1), (0,2)` for `m = 2`).
//! Every series carries `tail`, an upper bound on the ℓ¹ norm of the part of
//! the represented function that is not stored explicitly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::Interval;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SeriesError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("evaluation point outside the unit polydisc: {0}")]
    Domain(String),
}

/// Binomial coefficient as `usize` (small arguments only).
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r as usize
}

/// Number of multi-indices in `m` variables with `|α| ≤ deg`.
pub fn count_upto(m: usize, deg: usize) -> usize {
    binomial(deg + m, m)
}

/// Number of multi-indices with `|α| = d`.
pub fn count_eq(m: usize, d: usize) -> usize {
    if m == 0 {
        return usize::from(d == 0);
    }
    binomial(d + m - 1, m - 1)
}

/// `κ(N) = #{α : 2 ≤ |α| ≤ N}`.
pub fn kappa(m: usize, deg: usize) -> usize {
    if deg < 2 {
        0
    } else {
        count_upto(m, deg) - count_upto(m, 1)
    }
}

/// Position of `α` in graded-lex storage.
pub fn index_of(alpha: &[u32]) -> usize {
    let m = alpha.len();
    let d: usize = alpha.iter().map(|&a| a as usize).sum();
    match m {
        1 => d,
        2 => d * (d + 1) / 2 + (d - alpha[0] as usize),
        _ => {
            let base = if d == 0 { 0 } else { count_upto(m, d - 1) };
            base + rank_within_degree(alpha, d)
        }
    }
}

fn rank_within_degree(alpha: &[u32], d: usize) -> usize {
    let m = alpha.len();
    let mut rank = 0;
    let mut rem = d;
    for i in 0..m.saturating_sub(1) {
        let ai = alpha[i] as usize;
        // compositions that agree before position i and have a larger entry at i
        let parts = m - i - 1;
        for v in ai + 1..=rem {
            rank += count_eq(parts, rem - v);
        }
        rem -= ai;
    }
    rank
}

/// All multi-indices with `|α| ≤ deg`, flattened in storage order.
pub fn exponents(m: usize, deg: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(count_upto(m, deg) * m);
    let mut cur = vec![0u32; m];
    for d in 0..=deg {
        push_compositions(&mut out, &mut cur, 0, d);
    }
    out
}

fn push_compositions(out: &mut Vec<u32>, cur: &mut [u32], pos: usize, rem: usize) {
    let m = cur.len();
    if pos == m - 1 {
        cur[pos] = rem as u32;
        out.extend_from_slice(cur);
        return;
    }
    for v in (0..=rem).rev() {
        cur[pos] = v as u32;
        push_compositions(out, cur, pos + 1, rem - v);
    }
}

/// Start offsets of each total degree block: `starts[d]..starts[d+1]`.
pub fn degree_starts(m: usize, deg: usize) -> Vec<usize> {
    (0..=deg + 1).map(|d| if d == 0 { 0 } else { count_upto(m, d - 1) }).collect()
}

/// Calls `f(index(β), index(α-β))` for every `β ≤ α` (componentwise).
pub fn for_each_split<F: FnMut(usize, usize)>(alpha: &[u32], mut f: F) {
    match alpha.len() {
        1 => {
            let k = alpha[0] as usize;
            for b in 0..=k {
                f(b, k - b);
            }
        }
        2 => {
            let (a0, a1) = (alpha[0] as usize, alpha[1] as usize);
            for b0 in 0..=a0 {
                for b1 in 0..=a1 {
                    let db = b0 + b1;
                    let (c0, c1) = (a0 - b0, a1 - b1);
                    let dc = c0 + c1;
                    f(db * (db + 1) / 2 + b1, dc * (dc + 1) / 2 + c1);
                }
            }
        }
        m => {
            let mut beta = vec![0u32; m];
            let mut gamma = vec![0u32; m];
            loop {
                for k in 0..m {
                    gamma[k] = alpha[k] - beta[k];
                }
                f(index_of(&beta), index_of(&gamma));
                let mut k = 0;
                loop {
                    if k == m {
                        return;
                    }
                    if beta[k] < alpha[k] {
                        beta[k] += 1;
                        break;
                    }
                    beta[k] = 0;
                    k += 1;
                }
            }
        }
    }
}

/// Scalar series in `m` variables truncated at total degree `deg`.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    m: usize,
    deg: usize,
    coef: Vec<Interval>,
    tail: f64,
}

impl Series {
    pub fn zeros(m: usize, deg: usize) -> Series {
        assert!(m >= 1, "series need at least one variable");
        Series { m, deg, coef: vec![Interval::ZERO; count_upto(m, deg)], tail: 0.0 }
    }

    pub fn constant(m: usize, deg: usize, c: Interval) -> Series {
        let mut s = Series::zeros(m, deg);
        s.coef[0] = c;
        s
    }

    /// The coordinate function `θ_k`.
    pub fn variable(m: usize, deg: usize, k: usize) -> Series {
        let mut s = Series::zeros(m, deg.max(1));
        let mut e = vec![0u32; m];
        e[k] = 1;
        s.coef[index_of(&e)] = Interval::ONE;
        s
    }

    pub fn from_coeffs(m: usize, deg: usize, coef: Vec<Interval>, tail: f64) -> Result<Series, SeriesError> {
        if coef.len() != count_upto(m, deg) {
            return Err(SeriesError::Shape(format!(
                "{} coefficients given, {} expected for m={m}, N={deg}",
                coef.len(),
                count_upto(m, deg)
            )));
        }
        if !(tail >= 0.0) {
            return Err(SeriesError::Shape(format!("invalid tail radius {tail}")));
        }
        Ok(Series { m, deg, coef, tail })
    }

    pub fn from_floats(m: usize, deg: usize, vals: &[f64]) -> Result<Series, SeriesError> {
        Series::from_coeffs(m, deg, vals.iter().map(|&v| Interval::point(v)).collect(), 0.0)
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn degree(&self) -> usize {
        self.deg
    }
    pub fn tail(&self) -> f64 {
        self.tail
    }
    pub fn coeffs(&self) -> &[Interval] {
        &self.coef
    }
    pub fn coeffs_mut(&mut self) -> &mut [Interval] {
        &mut self.coef
    }

    pub fn set_tail(&mut self, t: f64) {
        assert!(t >= 0.0);
        self.tail = t;
    }

    pub fn add_tail(&mut self, t: f64) {
        self.tail = (Interval::point(self.tail) + Interval::point(t.abs())).hi();
    }

    /// Coefficient at `α`, zero beyond the stored degree.
    pub fn get(&self, alpha: &[u32]) -> Interval {
        let d: usize = alpha.iter().map(|&a| a as usize).sum();
        if d > self.deg {
            Interval::ZERO
        } else {
            self.coef[index_of(alpha)]
        }
    }

    pub fn set(&mut self, alpha: &[u32], v: Interval) {
        let i = index_of(alpha);
        self.coef[i] = v;
    }

    pub fn mids(&self) -> Vec<f64> {
        self.coef.iter().map(|c| c.mid()).collect()
    }

    /// Σ|a_α| per total degree (upper bounds).
    pub fn degree_profile(&self) -> Vec<f64> {
        let starts = degree_starts(self.m, self.deg);
        (0..=self.deg)
            .map(|d| {
                self.coef[starts[d]..starts[d + 1]].iter().map(|c| Interval::point(c.mag())).sum::<Interval>().hi()
            })
            .collect()
    }

    /// Rigorous bounds on `Σ|a_α| + tail`.
    pub fn ell1_norm(&self) -> Interval {
        let mut lo = Interval::ZERO;
        let mut hi = Interval::ZERO;
        for c in &self.coef {
            lo += Interval::point(c.mig());
            hi += Interval::point(c.mag());
        }
        hi += Interval::point(self.tail);
        Interval::from_bounds(lo.lo(), hi.hi())
    }

    /// Upper bound of the ℓ¹ norm.
    pub fn norm(&self) -> f64 {
        self.ell1_norm().hi()
    }

    /// Upper bound of Σ|a_α| over the stored coefficients only.
    pub fn coef_norm(&self) -> f64 {
        self.coef.iter().map(|c| Interval::point(c.mag())).sum::<Interval>().hi()
    }

    /// Norm of the stored coefficients of degree ≥ `from`, plus the tail.
    pub fn norm_from(&self, from: usize) -> f64 {
        let start = if from == 0 { 0 } else { count_upto(self.m, from - 1).min(self.coef.len()) };
        let s: Interval = self.coef[start..].iter().map(|c| Interval::point(c.mag())).sum();
        (s + Interval::point(self.tail)).hi()
    }

    fn check_shape(&self, other: &Series) -> Result<(), SeriesError> {
        if self.m != other.m {
            return Err(SeriesError::Shape(format!("m = {} vs {}", self.m, other.m)));
        }
        Ok(())
    }

    /// Re-truncates to `deg`, folding the discarded mass into the tail.
    pub fn truncate(&self, deg: usize) -> Series {
        if deg >= self.deg {
            return self.clone();
        }
        let keep = count_upto(self.m, deg);
        let dropped: Interval = self.coef[keep..].iter().map(|c| Interval::point(c.mag())).sum();
        Series {
            m: self.m,
            deg,
            coef: self.coef[..keep].to_vec(),
            tail: (dropped + Interval::point(self.tail)).hi(),
        }
    }

    /// Zero-pads up to degree `deg` (no-op if already that large).
    pub fn extend_to(&self, deg: usize) -> Series {
        if deg <= self.deg {
            return self.clone();
        }
        let mut coef = self.coef.clone();
        coef.resize(count_upto(self.m, deg), Interval::ZERO);
        Series { m: self.m, deg, coef, tail: self.tail }
    }

    pub fn try_add(&self, other: &Series) -> Result<Series, SeriesError> {
        self.check_shape(other)?;
        let deg = self.deg.max(other.deg);
        let mut out = self.extend_to(deg);
        for (o, b) in out.coef.iter_mut().zip(other.coef.iter()) {
            *o += *b;
        }
        out.tail = (Interval::point(self.tail) + Interval::point(other.tail)).hi();
        Ok(out)
    }

    pub fn add(&self, other: &Series) -> Series {
        self.try_add(other).expect("series shape mismatch")
    }

    pub fn sub(&self, other: &Series) -> Series {
        self.add(&other.scale(-Interval::ONE))
    }

    pub fn scale(&self, c: Interval) -> Series {
        Series {
            m: self.m,
            deg: self.deg,
            coef: self.coef.iter().map(|&a| a * c).collect(),
            tail: (Interval::point(self.tail) * Interval::point(c.mag())).hi(),
        }
    }

    /// In-place `self += c * other`.
    pub fn axpy(&mut self, c: Interval, other: &Series) {
        assert_eq!(self.m, other.m);
        if other.deg > self.deg {
            *self = self.extend_to(other.deg);
        }
        for (o, b) in self.coef.iter_mut().zip(other.coef.iter()) {
            *o += c * *b;
        }
        self.tail = (Interval::point(self.tail) + Interval::point(other.tail) * Interval::point(c.mag())).hi();
    }

    /// Cauchy product, exact up to degree `N_a + N_b` (or `trunc`, with the
    /// discarded part bounded through degree profiles and added to the tail).
    pub fn try_mul(&self, other: &Series, trunc: Option<usize>) -> Result<Series, SeriesError> {
        self.check_shape(other)?;
        let full = self.deg + other.deg;
        let deg = trunc.map_or(full, |t| t.min(full));
        let m = self.m;
        let mut out = Series::zeros(m, deg);
        match m {
            1 => mul_m1(&self.coef, &other.coef, &mut out.coef, deg),
            2 => mul_m2(&self.coef, self.deg, &other.coef, other.deg, &mut out.coef, deg),
            _ => mul_generic(m, &self.coef, self.deg, &other.coef, other.deg, &mut out.coef, deg),
        }
        let na = Interval::point(self.coef_norm());
        let nb = Interval::point(other.coef_norm());
        let (ta, tb) = (Interval::point(self.tail), Interval::point(other.tail));
        let mut tail = na * tb + ta * nb + ta * tb;
        if deg < full {
            let pa = self.degree_profile();
            let pb = other.degree_profile();
            let mut dropped = Interval::ZERO;
            for (s, &x) in pa.iter().enumerate() {
                for (t, &y) in pb.iter().enumerate() {
                    if s + t > deg {
                        dropped += Interval::point(x) * Interval::point(y);
                    }
                }
            }
            tail += dropped;
        }
        out.tail = tail.hi();
        Ok(out)
    }

    pub fn mul(&self, other: &Series) -> Series {
        self.try_mul(other, None).expect("series shape mismatch")
    }

    pub fn mul_trunc(&self, other: &Series, trunc: usize) -> Series {
        self.try_mul(other, Some(trunc)).expect("series shape mismatch")
    }

    /// `a^k` by repeated squaring.
    pub fn pow(&self, k: u32, trunc: Option<usize>) -> Series {
        let mut result = Series::constant(self.m, 0, Interval::ONE);
        if k == 0 {
            return result;
        }
        let mut base = self.clone();
        let mut e = k;
        let mut first = true;
        loop {
            if e & 1 == 1 {
                result = if first { base.clone() } else { result.try_mul(&base, trunc).unwrap() };
                first = false;
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = base.try_mul(&base, trunc).unwrap();
        }
        result
    }

    /// Interval evaluation on the closed unit polydisc, widened by the tail.
    pub fn eval(&self, theta: &[Interval]) -> Result<Interval, SeriesError> {
        if theta.len() != self.m {
            return Err(SeriesError::Shape(format!("point has {} coordinates, series has m={}", theta.len(), self.m)));
        }
        let unit = Interval::from_bounds(-1.0, 1.0);
        if let Some(t) = theta.iter().find(|t| !t.subset_of(&unit)) {
            return Err(SeriesError::Domain(t.to_string()));
        }
        Ok(self.eval_unchecked(theta) + Interval::symmetric(self.tail))
    }

    /// Evaluation of the stored polynomial part only (no domain check, no tail).
    pub fn eval_unchecked(&self, theta: &[Interval]) -> Interval {
        if self.m == 1 {
            let t = theta[0];
            let mut acc = Interval::ZERO;
            for c in self.coef.iter().rev() {
                acc = acc * t + *c;
            }
            return acc;
        }
        // powers θ_k^j for j ≤ deg
        let pw: Vec<Vec<Interval>> = theta
            .iter()
            .map(|&t| {
                let mut v = Vec::with_capacity(self.deg + 1);
                let mut p = Interval::ONE;
                for j in 0..=self.deg {
                    v.push(if j == 0 { Interval::ONE } else { p });
                    if j >= 1 {
                        p *= t;
                    } else {
                        p = t;
                    }
                }
                v
            })
            .collect();
        let exps = exponents(self.m, self.deg);
        let mut acc = Interval::ZERO;
        for (i, c) in self.coef.iter().enumerate() {
            if c.lo() == 0.0 && c.hi() == 0.0 {
                continue;
            }
            let mut term = *c;
            for k in 0..self.m {
                term *= pw[k][exps[i * self.m + k] as usize];
            }
            acc += term;
        }
        acc
    }

    /// Float evaluation of midpoint coefficients.
    pub fn eval_f64(&self, theta: &[f64]) -> f64 {
        if self.m == 1 {
            return self.coef.iter().rev().fold(0.0, |acc, c| acc * theta[0] + c.mid());
        }
        let exps = exponents(self.m, self.deg);
        self.coef
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut t = c.mid();
                for k in 0..self.m {
                    t *= theta[k].powi(exps[i * self.m + k] as i32);
                }
                t
            })
            .sum()
    }
}

fn mul_m1(a: &[Interval], b: &[Interval], out: &mut [Interval], deg: usize) {
    for (i, &x) in a.iter().enumerate() {
        if i > deg {
            break;
        }
        if x.lo() == 0.0 && x.hi() == 0.0 {
            continue;
        }
        let lim = (deg - i + 1).min(b.len());
        for (o, &y) in out[i..i + lim].iter_mut().zip(&b[..lim]) {
            *o += x * y;
        }
    }
}

fn mul_m2(a: &[Interval], da: usize, b: &[Interval], db: usize, out: &mut [Interval], deg: usize) {
    // index(d, j) = d(d+1)/2 + j where j = d - α₀ (position within degree)
    for s in 0..=da.min(deg) {
        let sa = s * (s + 1) / 2;
        for i in 0..=s {
            let x = a[sa + i];
            if x.lo() == 0.0 && x.hi() == 0.0 {
                continue;
            }
            for t in 0..=db.min(deg - s) {
                let sb = t * (t + 1) / 2;
                let d = s + t;
                let so = d * (d + 1) / 2;
                // α = (s-i, i) + (t-j, j) = (d-(i+j), i+j)
                for j in 0..=t {
                    out[so + i + j] += x * b[sb + j];
                }
            }
        }
    }
}

fn mul_generic(m: usize, a: &[Interval], da: usize, b: &[Interval], db: usize, out: &mut [Interval], deg: usize) {
    let ea = exponents(m, da);
    let eb = exponents(m, db);
    let mut sum = vec![0u32; m];
    for (i, &x) in a.iter().enumerate() {
        let ai = &ea[i * m..(i + 1) * m];
        let s: usize = ai.iter().map(|&v| v as usize).sum();
        if s > deg {
            break;
        }
        for (j, &y) in b.iter().enumerate() {
            let bj = &eb[j * m..(j + 1) * m];
            let t: usize = bj.iter().map(|&v| v as usize).sum();
            if s + t > deg {
                break;
            }
            for k in 0..m {
                sum[k] = ai[k] + bj[k];
            }
            out[index_of(&sum)] += x * y;
        }
    }
}

/// `R^n`-valued series: one [`Series`] per component.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorCoeffs {
    pub comps: Vec<Series>,
}

#[derive(Serialize, Deserialize)]
struct TaylorCoeffsJson {
    m: usize,
    n: usize,
    #[serde(rename = "N")]
    deg: usize,
    coeffs: Vec<Vec<Interval>>,
    tail_radius: f64,
}

impl TaylorCoeffs {
    pub fn new(comps: Vec<Series>) -> Result<Self, SeriesError> {
        let first = comps.first().ok_or_else(|| SeriesError::Shape("no components".into()))?;
        if comps.iter().any(|c| c.m != first.m || c.deg != first.deg) {
            return Err(SeriesError::Shape("components differ in m or degree".into()));
        }
        Ok(TaylorCoeffs { comps })
    }
    pub fn n(&self) -> usize {
        self.comps.len()
    }
    pub fn m(&self) -> usize {
        self.comps[0].m
    }
    pub fn degree(&self) -> usize {
        self.comps[0].deg
    }
    /// Largest per-component tail radius.
    pub fn tail_radius(&self) -> f64 {
        self.comps.iter().map(|c| c.tail).fold(0.0, f64::max)
    }

    /// Componentwise enclosure on the unit polydisc.
    pub fn eval_enclosure(&self, theta: &[Interval]) -> Result<Vec<Interval>, SeriesError> {
        self.comps.iter().map(|c| c.eval(theta)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TaylorCoeffsJson {
            m: self.m(),
            n: self.n(),
            deg: self.degree(),
            coeffs: self.comps.iter().map(|c| c.coef.clone()).collect(),
            tail_radius: self.tail_radius(),
        })
        .expect("serializing series")
    }

    pub fn from_json(s: &str) -> Result<Self, SeriesError> {
        let j: TaylorCoeffsJson = serde_json::from_str(s).map_err(|e| SeriesError::Shape(e.to_string()))?;
        if j.coeffs.len() != j.n {
            return Err(SeriesError::Shape(format!("n = {} but {} components", j.n, j.coeffs.len())));
        }
        let comps = j
            .coeffs
            .into_iter()
            .map(|c| Series::from_coeffs(j.m, j.deg, c, j.tail_radius))
            .collect::<Result<Vec<_>, _>>()?;
        TaylorCoeffs::new(comps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s1(v: &[f64]) -> Series {
        Series::from_floats(1, v.len() - 1, v).unwrap()
    }

    #[test]
    fn counts_and_indexing() {
        for m in 1..=3 {
            for deg in 0..=7 {
                let e = exponents(m, deg);
                assert_eq!(e.len() / m, count_upto(m, deg));
                for i in 0..e.len() / m {
                    assert_eq!(index_of(&e[i * m..(i + 1) * m]), i);
                }
            }
        }
        assert_eq!(kappa(1, 300), 299);
        assert_eq!(kappa(2, 50), binomial(52, 2) - 3);
        assert_eq!(exponents(2, 2), vec![0, 0, 1, 0, 0, 1, 2, 0, 1, 1, 0, 2]);
    }

    #[test]
    fn splits_cover_all_pairs() {
        for alpha in [vec![3u32], vec![2, 3], vec![1, 0, 2]] {
            let mut seen = Vec::new();
            for_each_split(&alpha, |b, c| seen.push((b, c)));
            let expected: usize = alpha.iter().map(|&a| a as usize + 1).product();
            assert_eq!(seen.len(), expected);
            let m = alpha.len();
            let d: usize = alpha.iter().map(|&a| a as usize).sum();
            let e = exponents(m, d);
            for (b, c) in seen {
                let sum: Vec<u32> = (0..m).map(|k| e[b * m + k] + e[c * m + k]).collect();
                assert_eq!(sum, alpha);
            }
        }
    }

    #[test]
    fn product_examples() {
        let z = Series::zeros(1, 3);
        let a = s1(&[1.0, 2.0, 3.0]);
        assert!(z.mul(&a).coeffs().iter().all(|c| *c == Interval::ZERO));
        let t = Series::variable(1, 3, 0);
        let t2 = t.mul(&t);
        assert_eq!(t2.coeffs()[2], Interval::ONE);
        assert_eq!(t2.coeffs()[1], Interval::ZERO);
    }

    #[test]
    fn truncation_keeps_mass() {
        let a = s1(&[1.0, 0.5, 0.25, 0.125]);
        let full = a.mul(&a);
        let tr = a.mul_trunc(&a, 3);
        assert_eq!(tr.degree(), 3);
        for i in 0..=3 {
            assert!(full.coeffs()[i].subset_of(&tr.coeffs()[i].inflate(1e-15)));
        }
        let dropped: f64 = full.coeffs()[4..].iter().map(|c| c.mag()).sum();
        assert!(tr.tail() >= dropped);
        let tt = full.truncate(2);
        assert!(tt.tail() >= full.coeffs()[3..].iter().map(|c| c.mag()).sum::<f64>());
    }

    #[test]
    fn pow_valuation_and_identity() {
        let a = s1(&[0.0, 1.0, -0.5, 0.3]);
        assert_eq!(a.pow(1, None), a);
        let a4 = a.pow(4, None);
        for i in 0..4 {
            assert!(a4.coeffs()[i].contains_zero() && a4.coeffs()[i].mag() == 0.0);
        }
        let chain = a.mul(&a).mul(&a).mul(&a);
        for (x, y) in a4.coeffs().iter().zip(chain.coeffs()) {
            assert!((x.mid() - y.mid()).abs() < 1e-14);
        }
    }

    #[test]
    fn norms() {
        assert_eq!(Series::zeros(2, 3).ell1_norm(), Interval::ZERO);
        let a = s1(&[1.0, -2.0, 3.0]);
        assert!(a.ell1_norm().contains(6.0));
        let mut b = a.clone();
        b.set_tail(0.5);
        assert!(b.ell1_norm().hi() >= 6.5);
        assert!(b.ell1_norm().lo() <= 6.0);
    }

    #[test]
    fn evaluation() {
        let mut p = Series::zeros(1, 1);
        p.coeffs_mut()[0] = Interval::point(2.0);
        p.coeffs_mut()[1] = Interval::point(-3.0);
        assert!(p.eval(&[Interval::ONE]).unwrap().contains(-1.0));
        assert!(p.eval(&[Interval::ZERO]).unwrap().contains(2.0));
        assert!(matches!(p.eval(&[Interval::point(1.5)]), Err(SeriesError::Domain(_))));
        let mut q = Series::zeros(2, 2);
        q.set(&[1, 1], Interval::point(2.0));
        q.set(&[0, 2], Interval::point(1.0));
        q.set_tail(1e-3);
        let v = q.eval(&[Interval::point(0.5), Interval::point(-0.5)]).unwrap();
        assert!(v.contains(-0.25) && v.width() <= 2.1e-3);
    }

    #[test]
    fn json_round_trip() {
        let mut a = Series::zeros(2, 2);
        a.set(&[1, 0], Interval::from_bounds(0.1, 0.2));
        a.set_tail(1e-9);
        let t = TaylorCoeffs::new(vec![a.clone(), a]).unwrap();
        let back = TaylorCoeffs::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn shape_errors() {
        let a = Series::zeros(1, 2);
        let b = Series::zeros(2, 2);
        assert!(matches!(a.try_mul(&b, None), Err(SeriesError::Shape(_))));
        assert!(Series::from_floats(2, 1, &[1.0]).is_err());
    }
}
