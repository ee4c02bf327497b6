//! Compactifications of `R^n` and their inverses.
//!
//! All formulas use `p(y)^{2c} = Σ y_i^{2β_i}` directly; the `2c`-th root is
//! never taken.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{interval_newton_scalar, Interval, IntervalError};
use crate::poly::Poly;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum CompactifyError {
    #[error("invalid compactification: {0}")]
    Spec(String),
    #[error("point outside the chart domain: {0}")]
    Domain(String),
    #[error("point is on or beyond the horizon (p^2c = {0})")]
    Horizon(Interval),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Newton(#[from] IntervalError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Chart with `y_index = ±1/s`; `s` is stored in position `index`.
    Directional { index: usize, positive: bool },
    Poincare,
    Parabolic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompactificationSpec {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    pub c: u32,
    pub k: u32,
    pub kind: Kind,
}

impl CompactificationSpec {
    pub fn new(alpha: Vec<u32>, beta: Vec<u32>, c: u32, k: u32, kind: Kind) -> Result<Self, CompactifyError> {
        if alpha.len() != beta.len() || alpha.is_empty() {
            return Err(CompactifyError::Spec("alpha and beta must have equal nonzero length".into()));
        }
        match kind {
            Kind::Directional { index, .. } => {
                if index >= alpha.len() {
                    return Err(CompactifyError::Spec(format!("directional index {index} out of range")));
                }
            }
            Kind::Poincare | Kind::Parabolic => {
                if c == 0 || alpha.iter().zip(&beta).any(|(a, b)| *a == 0 || a * b != c) {
                    return Err(CompactifyError::Spec(format!(
                        "need alpha_i * beta_i = c > 0 for all i (alpha={alpha:?}, beta={beta:?}, c={c})"
                    )));
                }
            }
        }
        Ok(CompactificationSpec { alpha, beta, c, k, kind })
    }

    pub fn homogeneous_poincare(n: usize, k: u32) -> Self {
        CompactificationSpec::new(vec![1; n], vec![1; n], 1, k, Kind::Poincare).unwrap()
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    /// Whether `k / 2c` is a natural number.
    pub fn k_over_2c_integral(&self) -> bool {
        self.c > 0 && self.k % (2 * self.c) == 0
    }

    /// The function whose level set is the horizon, and that level.
    pub fn horizon_function(&self) -> (Poly, f64) {
        let n = self.n();
        match self.kind {
            Kind::Directional { index, .. } => (Poly::var(n, index), 0.0),
            Kind::Poincare | Kind::Parabolic => {
                let mut p = Poly::zero(n);
                for (i, &b) in self.beta.iter().enumerate() {
                    p = p.add(&Poly::var(n, i).pow(2 * b));
                }
                (p, 1.0)
            }
        }
    }
}

/// `p(y)^{2c} = Σ y_i^{2β_i}`.
pub fn horizon_p(y: &[Interval], spec: &CompactificationSpec) -> Interval {
    y.iter().zip(&spec.beta).map(|(v, &b)| v.int_pow(2 * b)).sum()
}

/// `(y_1..y_n) -> (x̂, s)` with `s = 1/y_i` stored at index `i`.
pub fn directional_forward(y: &[Interval], spec: &CompactificationSpec) -> Result<Vec<Interval>, CompactifyError> {
    let Kind::Directional { index, positive } = spec.kind else {
        return Err(CompactifyError::Spec("not a directional chart".into()));
    };
    if spec.alpha[index] != 1 {
        return Err(CompactifyError::Unsupported("directional chart needs alpha_i = 1".into()));
    }
    let yi = y[index];
    let ok = if positive { yi.is_positive() } else { yi.is_negative() };
    if !ok {
        return Err(CompactifyError::Domain(format!("y_{index} = {yi} has the wrong sign")));
    }
    let s = if positive { yi.recip()? } else { (-yi).recip()? };
    Ok(y.iter()
        .enumerate()
        .map(|(j, &v)| if j == index { s } else { v * s.int_pow(spec.alpha[j]) })
        .collect())
}

pub fn directional_inverse(x: &[Interval], spec: &CompactificationSpec) -> Result<Vec<Interval>, CompactifyError> {
    let Kind::Directional { index, positive } = spec.kind else {
        return Err(CompactifyError::Spec("not a directional chart".into()));
    };
    let s = x[index];
    if !s.is_positive() {
        return Err(CompactifyError::Horizon(s));
    }
    x.iter()
        .enumerate()
        .map(|(j, &v)| {
            let sa = s.int_pow(spec.alpha[j]);
            if j == index {
                let r = sa.recip()?;
                Ok(if positive { r } else { -r })
            } else {
                Ok(v.checked_div(sa)?)
            }
        })
        .collect()
}

/// Quasi-parabolic compactification: `x_i = y_i / κ^{α_i}` with
/// `κ^{2c} - κ^{2c-1} = p(y)^{2c}`.
pub fn parabolic_forward(y: &[Interval], spec: &CompactificationSpec) -> Result<Vec<Interval>, CompactifyError> {
    let kappa = parabolic_kappa(y, spec)?;
    Ok(y.iter().zip(&spec.alpha).map(|(v, &a)| *v / kappa.int_pow(a)).collect())
}

/// The unique root `κ ≥ 1` of `κ^{2c} - κ^{2c-1} - p(y)^{2c}`.
pub fn parabolic_kappa(y: &[Interval], spec: &CompactificationSpec) -> Result<Interval, CompactifyError> {
    if spec.kind != Kind::Parabolic {
        return Err(CompactifyError::Spec("not a parabolic compactification".into()));
    }
    let r = horizon_p(y, spec);
    if r.hi() == 0.0 {
        return Ok(Interval::ONE);
    }
    let c2 = 2 * spec.c;
    let f = |k: Interval| k.int_pow(c2) - k.int_pow(c2 - 1) - r;
    let df = |k: Interval| k.int_pow(c2 - 2) * (k * Interval::point(c2 as f64) - Interval::point((c2 - 1) as f64));
    if r.lo() == 0.0 {
        // bracket degenerates; the root lies in [1, 1 + r.hi]
        let hi = Interval::ONE + Interval::point(r.hi());
        return Ok(Interval::from_bounds(1.0, hi.hi()));
    }
    let bracket = Interval::from_bounds(1.0, (Interval::ONE + Interval::point(r.hi())).hi());
    let tol = 4.0 * f64::EPSILON * bracket.hi() + 2.0 * r.width();
    Ok(interval_newton_scalar(f, df, bracket, tol)?)
}

/// `y_j = x_j / (1 - p(x)^{2c})^{α_j}`.
pub fn parabolic_inverse(x: &[Interval], spec: &CompactificationSpec) -> Result<Vec<Interval>, CompactifyError> {
    let p = horizon_p(x, spec);
    if p.hi() >= 1.0 {
        return Err(CompactifyError::Horizon(p));
    }
    let d = Interval::ONE - p;
    Ok(x.iter().zip(&spec.alpha).map(|(v, &a)| *v / d.int_pow(a)).collect())
}

/// Homogeneous Poincaré compactification `x = y / √(1 + |y|²)`.
pub fn poincare_forward(y: &[Interval], spec: &CompactificationSpec) -> Result<Vec<Interval>, CompactifyError> {
    check_homogeneous(spec)?;
    let s: Interval = y.iter().map(|v| v.sqr()).sum();
    let d = (Interval::ONE + s).sqrt()?;
    Ok(y.iter().map(|v| *v / d).collect())
}

pub fn poincare_inverse(x: &[Interval], spec: &CompactificationSpec) -> Result<Vec<Interval>, CompactifyError> {
    check_homogeneous(spec)?;
    let s: Interval = x.iter().map(|v| v.sqr()).sum();
    if s.hi() >= 1.0 {
        return Err(CompactifyError::Horizon(s));
    }
    let d = (Interval::ONE - s).sqrt()?;
    Ok(x.iter().map(|v| *v / d).collect())
}

fn check_homogeneous(spec: &CompactificationSpec) -> Result<(), CompactifyError> {
    if spec.kind != Kind::Poincare || spec.c != 1 || spec.alpha.iter().any(|&a| a != 1) {
        return Err(CompactifyError::Unsupported("only the homogeneous Poincaré compactification".into()));
    }
    Ok(())
}

/// Maps an original-space point into the compactified coordinates.
pub fn forward(y: &[Interval], spec: &CompactificationSpec) -> Result<Vec<Interval>, CompactifyError> {
    match spec.kind {
        Kind::Directional { .. } => directional_forward(y, spec),
        Kind::Poincare => poincare_forward(y, spec),
        Kind::Parabolic => parabolic_forward(y, spec),
    }
}

/// Maps a compactified point back to the original space.
pub fn inverse(x: &[Interval], spec: &CompactificationSpec) -> Result<Vec<Interval>, CompactifyError> {
    match spec.kind {
        Kind::Directional { .. } => directional_inverse(x, spec),
        Kind::Poincare => poincare_inverse(x, spec),
        Kind::Parabolic => parabolic_inverse(x, spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[f64]) -> Vec<Interval> {
        v.iter().map(|&x| Interval::point(x)).collect()
    }

    fn ex3() -> CompactificationSpec {
        CompactificationSpec::new(vec![1, 2], vec![2, 1], 2, 1, Kind::Parabolic).unwrap()
    }

    fn ex1() -> CompactificationSpec {
        CompactificationSpec::new(vec![0, 1], vec![1, 1], 1, 1, Kind::Directional { index: 1, positive: true })
            .unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(CompactificationSpec::new(vec![1, 2], vec![2, 2], 2, 2, Kind::Parabolic).is_err());
        assert!(CompactificationSpec::new(vec![1], vec![1, 1], 1, 2, Kind::Poincare).is_err());
        assert!(ex3().k_over_2c_integral() == false);
        assert!(CompactificationSpec::homogeneous_poincare(3, 2).k_over_2c_integral());
    }

    #[test]
    fn horizon_values() {
        assert_eq!(horizon_p(&pts(&[0.0, 0.0]), &ex3()), Interval::ZERO);
        assert!(horizon_p(&pts(&[1.0, 0.0]), &ex3()).contains(1.0));
        let v = horizon_p(&pts(&[0.3, -0.7]), &ex3());
        assert!(v.contains(0.3f64.powi(4) + 0.49) || (v.mid() - (0.0081 + 0.49)).abs() < 1e-15);
    }

    #[test]
    fn directional_chart() {
        let x = directional_forward(&pts(&[1.9, 4.0]), &ex1()).unwrap();
        assert!(x[0].contains(1.9) && x[1].contains(0.25));
        let y = directional_inverse(&x, &ex1()).unwrap();
        assert!(y[0].contains(1.9) && y[1].contains(4.0));
        assert!(directional_forward(&pts(&[1.0, -1.0]), &ex1()).is_err());
        let e = directional_forward(&pts(&[0.0, 1.0]), &ex1()).unwrap();
        assert!(e[1].contains(1.0) && e[0].contains(0.0));
    }

    #[test]
    fn parabolic_chart() {
        let z = parabolic_forward(&pts(&[0.0, 0.0]), &ex3()).unwrap();
        assert_eq!(z, pts(&[0.0, 0.0]));
        let x = parabolic_forward(&pts(&[0.36072017, 0.40662201]), &ex3()).unwrap();
        assert!((x[0].mid() - 0.32).abs() < 1e-4 && (x[1].mid() - 0.32).abs() < 1e-4);
        let y = parabolic_inverse(&x, &ex3()).unwrap();
        assert!((y[0].mid() - 0.36072017).abs() < 1e-10 && (y[1].mid() - 0.40662201).abs() < 1e-10);
        assert!(parabolic_inverse(&pts(&[1.0, 0.0]), &ex3()).is_err());
    }

    #[test]
    fn poincare_chart() {
        let s = CompactificationSpec::homogeneous_poincare(2, 2);
        assert_eq!(poincare_forward(&pts(&[0.0, 0.0]), &s).unwrap(), pts(&[0.0, 0.0]));
        let y = poincare_inverse(&pts(&[1.0 - 1e-8, 0.0]), &s).unwrap();
        assert!(y[0].lo() > 1e3);
        assert!(poincare_inverse(&pts(&[0.8, 0.6]), &s).is_err());
    }
}
