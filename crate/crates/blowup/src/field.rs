//! Polynomial vector fields, the bundled example systems, and verified
//! equilibria with their eigen-structure.

use std::fmt::Write as _;

use nalgebra::{Complex, DMatrix};
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compactify::{CompactificationSpec, Kind};
use crate::interval::Interval;
use crate::linalg::{self, LinalgError, Mat, Scalar};
use crate::poly::{parse_rational, Poly, PolyError};
use crate::program::Program;
use crate::series::{Series, TaylorCoeffs};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum FieldError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("model file: {0}")]
    Model(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("no verified zero near the guess: {0}")]
    NoContraction(String),
    #[error("eigenvalue {0} is not bounded away from zero")]
    NonHyperbolic(Interval),
    #[error("complex eigenvalue pair near {re} ± {im}i could not be certified")]
    ComplexPair { re: f64, im: f64 },
    #[error("possible resonance: {0}")]
    ResonancePossible(String),
    #[error("time factor: {0}")]
    TimeFactor(String),
}

impl From<LinalgError> for FieldError {
    fn from(e: LinalgError) -> Self {
        FieldError::NoContraction(e.to_string())
    }
}

/// Integrand `S` of the original time along desingularized orbits.
#[derive(Clone, Debug, PartialEq)]
pub enum TimeFactor {
    Poly(Poly),
    Rational { num: Poly, den: Poly },
}

#[derive(Clone, Debug)]
pub struct PolyField {
    name: String,
    comps: Vec<Poly>,
    spec: Option<CompactificationSpec>,
    timefactor: Option<TimeFactor>,
    program: Program,
}

impl PolyField {
    pub fn new(
        name: &str,
        comps: Vec<Poly>,
        spec: Option<CompactificationSpec>,
        timefactor: Option<TimeFactor>,
    ) -> Result<PolyField, FieldError> {
        let n = comps.len();
        if n == 0 || comps.iter().any(|p| p.nvars() != n) {
            return Err(FieldError::Shape(format!("{n} components must each use {n} variables")));
        }
        if let Some(s) = &spec {
            if s.n() != n {
                return Err(FieldError::Shape(format!("compactification for n={} on an n={n} field", s.n())));
            }
        }
        let mut outs: Vec<Poly> = comps.clone();
        for p in &comps {
            for j in 0..n {
                outs.push(p.deriv(j));
            }
        }
        match &timefactor {
            Some(TimeFactor::Poly(s)) => outs.push(s.clone()),
            Some(TimeFactor::Rational { num, den }) => {
                outs.push(num.clone());
                outs.push(den.clone());
            }
            None => {}
        }
        let refs: Vec<&Poly> = outs.iter().collect();
        let program = Program::new(n, &refs);
        Ok(PolyField { name: name.to_string(), comps, spec, timefactor, program })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn n(&self) -> usize {
        self.comps.len()
    }
    pub fn comps(&self) -> &[Poly] {
        &self.comps
    }
    pub fn spec(&self) -> Option<&CompactificationSpec> {
        self.spec.as_ref()
    }
    pub fn timefactor(&self) -> Option<&TimeFactor> {
        self.timefactor.as_ref()
    }
    pub fn program(&self) -> &Program {
        &self.program
    }

    /// Maximal total degree `d` of the components.
    pub fn degree(&self) -> u32 {
        self.comps.iter().map(|p| p.degree()).max().unwrap_or(0)
    }

    /// Program output index of `∂g_i/∂x_j`.
    pub fn jac_output(&self, i: usize, j: usize) -> usize {
        self.n() + i * self.n() + j
    }

    /// Program output index of the time factor (numerator for rational `S`).
    pub fn time_output(&self) -> usize {
        self.n() + self.n() * self.n()
    }

    /// Field with reversed time, same time factor.
    pub fn negated(&self) -> PolyField {
        let comps = self.comps.iter().map(|p| p.neg()).collect();
        PolyField::new(&format!("{}-reversed", self.name), comps, self.spec.clone(), self.timefactor.clone())
            .expect("negation keeps shape")
    }

    pub fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        self.program.eval_outputs(x, 0..self.n())
    }

    pub fn jacobian<T: Scalar>(&self, x: &[T]) -> Mat<T> {
        let n = self.n();
        let flat = self.program.eval_outputs(x, n..n + n * n);
        flat.chunks(n).map(|r| r.to_vec()).collect()
    }

    /// `H[i][j][k] = ∂²g_i/∂x_j∂x_k`.
    pub fn hessian(&self, x: &[Interval]) -> Vec<Mat<Interval>> {
        self.second_derivatives()
            .iter()
            .map(|hi| hi.iter().map(|row| row.iter().map(|p| p.eval_interval(x)).collect()).collect())
            .collect()
    }

    pub fn second_derivatives(&self) -> Vec<Vec<Vec<Poly>>> {
        let n = self.n();
        self.comps
            .iter()
            .map(|p| (0..n).map(|j| (0..n).map(|k| p.deriv(j).deriv(k)).collect()).collect())
            .collect()
    }

    /// `g(a)` with monomials replaced by Cauchy products.
    pub fn apply_to_series(&self, a: &TaylorCoeffs, trunc: Option<usize>) -> Result<TaylorCoeffs, FieldError> {
        if a.n() != self.n() {
            return Err(FieldError::Shape(format!("series has n={}, field has n={}", a.n(), self.n())));
        }
        let all = self.program.eval_series(&a.comps, trunc);
        let deg = all[..self.n()].iter().map(|s| s.degree()).max().unwrap_or(0);
        let comps: Vec<Series> = all.into_iter().take(self.n()).map(|s| s.extend_to(deg)).collect();
        TaylorCoeffs::new(comps).map_err(|e| FieldError::Shape(e.to_string()))
    }

    /// Interval enclosure of `S(x)`.
    pub fn time_factor(&self, x: &[Interval]) -> Result<Interval, FieldError> {
        match &self.timefactor {
            None => Err(FieldError::TimeFactor("model has no time factor".into())),
            Some(TimeFactor::Poly(_)) => Ok(self.program.eval_outputs(x, self.time_output()..self.time_output() + 1)[0]),
            Some(TimeFactor::Rational { .. }) => {
                let o = self.program.eval_outputs(x, self.time_output()..self.time_output() + 2);
                o[0].checked_div(o[1]).map_err(|e| FieldError::TimeFactor(e.to_string()))
            }
        }
    }

    /// Plain-text model description (readable by [`PolyField::from_model_str`]).
    pub fn to_model_string(&self) -> String {
        let mut s = String::new();
        writeln!(s, "name = {}", self.name).unwrap();
        writeln!(s, "n = {}", self.n()).unwrap();
        if let Some(sp) = &self.spec {
            let join = |v: &[u32]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
            match sp.kind {
                Kind::Directional { index, positive } => {
                    writeln!(s, "kind = directional {} {}", index + 1, if positive { "+" } else { "-" }).unwrap()
                }
                Kind::Poincare => writeln!(s, "kind = poincare").unwrap(),
                Kind::Parabolic => writeln!(s, "kind = parabolic").unwrap(),
            }
            writeln!(s, "alpha = {}", join(&sp.alpha)).unwrap();
            writeln!(s, "beta = {}", join(&sp.beta)).unwrap();
            writeln!(s, "c = {}", sp.c).unwrap();
            writeln!(s, "k = {}", sp.k).unwrap();
        }
        for (i, p) in self.comps.iter().enumerate() {
            writeln!(s, "g{} = {}", i + 1, p).unwrap();
        }
        match &self.timefactor {
            Some(TimeFactor::Poly(p)) => writeln!(s, "S = {p}").unwrap(),
            Some(TimeFactor::Rational { num, den }) => {
                writeln!(s, "S_num = {num}").unwrap();
                writeln!(s, "S_den = {den}").unwrap();
            }
            None => {}
        }
        s
    }

    /// Parses the key-value model format; `#` starts a comment.
    pub fn from_model_str(text: &str) -> Result<PolyField, FieldError> {
        let mut kv: Vec<(String, String)> = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| FieldError::Model(format!("line {}: expected key = value", ln + 1)))?;
            kv.push((k.trim().to_string(), v.trim().to_string()));
        }
        let get = |key: &str| kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let n: usize = get("n")
            .ok_or_else(|| FieldError::Model("missing n".into()))?
            .parse()
            .map_err(|_| FieldError::Model("n must be a positive integer".into()))?;
        let name = get("name").unwrap_or("model");
        let comps = (1..=n)
            .map(|i| {
                let src = get(&format!("g{i}")).ok_or_else(|| FieldError::Model(format!("missing g{i}")))?;
                Ok(Poly::parse(n, src)?)
            })
            .collect::<Result<Vec<_>, FieldError>>()?;
        let ints = |key: &str| -> Result<Vec<u32>, FieldError> {
            get(key)
                .ok_or_else(|| FieldError::Model(format!("missing {key}")))?
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| FieldError::Model(format!("bad integer in {key}"))))
                .collect()
        };
        let spec = match get("kind") {
            None => None,
            Some(kind) => {
                let mut parts = kind.split_whitespace();
                let kind = match parts.next() {
                    Some("poincare") => Kind::Poincare,
                    Some("parabolic") => Kind::Parabolic,
                    Some("directional") => {
                        let idx: usize = parts
                            .next()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| FieldError::Model("directional needs an index".into()))?;
                        let positive = parts.next() != Some("-");
                        Kind::Directional { index: idx.saturating_sub(1), positive }
                    }
                    other => return Err(FieldError::Model(format!("unknown kind {other:?}"))),
                };
                let one = |key: &str| -> Result<u32, FieldError> {
                    ints(key)?.first().copied().ok_or_else(|| FieldError::Model(format!("empty {key}")))
                };
                Some(
                    CompactificationSpec::new(ints("alpha")?, ints("beta")?, one("c")?, one("k")?, kind)
                        .map_err(|e| FieldError::Model(e.to_string()))?,
                )
            }
        };
        let timefactor = match (get("S"), get("S_num"), get("S_den")) {
            (Some(s), _, _) => Some(TimeFactor::Poly(Poly::parse(n, s)?)),
            (None, Some(a), Some(b)) => Some(TimeFactor::Rational { num: Poly::parse(n, a)?, den: Poly::parse(n, b)? }),
            (None, None, None) => None,
            _ => return Err(FieldError::Model("S_num and S_den must be given together".into())),
        };
        PolyField::new(name, comps, spec, timefactor)
    }

    /// Loads a bundled example by name or a model file by path.
    pub fn load(model: &str) -> Result<PolyField, FieldError> {
        match model {
            "example1" => Ok(build_example1()),
            "example2" => Ok(build_example2()),
            "example3" => Ok(build_example3()),
            path => {
                let text = std::fs::read_to_string(path).map_err(|e| FieldError::Model(format!("{path}: {e}")))?;
                PolyField::from_model_str(&text)
            }
        }
    }
}

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

/// Constants `(c, c1, c2)` of the two-phase flow example, exact.
pub fn example1_constants() -> (BigRational, BigRational, BigRational) {
    let (rho1, rho2) = (q(1, 1), q(2, 1));
    let b1 = |b: &BigRational| (b - &rho1) * (b - &rho2) / b;
    let b2 = |b: &BigRational| (b * b - &rho1 * &rho2) / (q(2, 1) * b * b);
    let (bl, vl, br, vr) = (q(19, 10), q(4, 1), q(3, 2), q(5, 1));
    let c = (&vr * b1(&br) - &vl * b1(&bl)) / (&br - &bl);
    let c1 = &vl * b1(&bl) - &c * &bl;
    let c2 = &vl * &vl * b2(&bl) - &c * &vl;
    (c, c1, c2)
}

/// Two-phase flow traveling waves in the directional chart `(x1, s) = (β, 1/v)`
/// after the extra time change `dτ/dη = x1^{-2}`; `S = x2 / x1²`.
pub fn build_example1() -> PolyField {
    let (c, c1, c2) = example1_constants();
    let (rho1, rho2) = (q(1, 1), q(2, 1));
    let x1 = Poly::var(2, 0);
    let s = Poly::var(2, 1);
    let k = |v: &BigRational| Poly::constant(2, v.clone());
    let g1 = x1
        .mul(&x1.sub(&k(&rho1)))
        .mul(&x1.sub(&k(&rho2)))
        .sub(&x1.pow(3).mul(&s).scale(&c))
        .sub(&x1.pow(2).mul(&s).scale(&c1));
    let inner = x1.pow(2).sub(&k(&(&rho1 * &rho2))).scale(&q(1, 2)).sub(
        &x1.pow(2).mul(&s.scale(&c).add(&s.pow(2).scale(&c2))),
    );
    let g2 = s.mul(&inner).neg();
    let spec = CompactificationSpec::new(vec![0, 1], vec![1, 1], 1, 1, Kind::Directional { index: 1, positive: true })
        .expect("valid chart");
    let tf = TimeFactor::Rational { num: s, den: x1.pow(2) };
    PolyField::new("example1", vec![g1, g2], Some(spec), Some(tf)).expect("example 1")
}

/// Parameters `(a, c, δ, w)` of the three-dimensional example.
pub fn example2_parameters() -> [BigRational; 4] {
    ["0.3", "0.7", "9.0", "0.02"].map(|s| parse_rational(s).unwrap())
}

/// Homogeneous Poincaré desingularization `g = f̃ - x G`, `G = Σ x_j f̃_j`;
/// `S = 1 - |x|²`.
pub fn build_example2() -> PolyField {
    let [a, c, delta, w] = example2_parameters();
    let x: Vec<Poly> = (0..3).map(|i| Poly::var(3, i)).collect();
    let one = Poly::from_int(3, 1);
    let r2 = x[0].pow(2).add(&x[1].pow(2)).add(&x[2].pow(2));
    let dinv = BigRational::one() / delta;
    let f1 = x[0].pow(3).sub(&one.sub(&r2).mul(&x[0]));
    let f2 = x[0].pow(2).mul(&x[1]).add(&x[0].pow(2).mul(&x[2]));
    let brace = x[0]
        .pow(2)
        .mul(&x[2])
        .scale(&c)
        .sub(&x[1].mul(&x[1].sub(&x[0].scale(&a))).mul(&x[0].sub(&x[1])))
        .add(&x[0].pow(3).scale(&w));
    let f3 = x[0].pow(2).mul(&x[2]).add(&brace.scale(&dinv));
    let ft = [f1, f2, f3];
    let mut big_g = Poly::zero(3);
    for j in 0..3 {
        big_g = big_g.add(&x[j].mul(&ft[j]));
    }
    let comps = (0..3).map(|i| ft[i].sub(&x[i].mul(&big_g))).collect();
    let spec = CompactificationSpec::homogeneous_poincare(3, 2);
    PolyField::new("example2", comps, Some(spec), Some(TimeFactor::Poly(one.sub(&r2)))).expect("example 2")
}

/// Quasi-parabolic desingularization of `u' = u² - v, v' = u³/3 - u` with
/// type (1,2); `S = ¼(1 + 3p⁴)(1 - p⁴)`, `p⁴ = x1⁴ + x2²`.
pub fn build_example3() -> PolyField {
    let x1 = Poly::var(2, 0);
    let x2 = Poly::var(2, 1);
    let one = Poly::from_int(2, 1);
    let p4 = x1.pow(4).add(&x2.pow(2));
    let h1 = one.add(&p4.scale(&q(3, 1))).scale(&q(1, 4));
    let f2 = x1.pow(3).scale(&q(1, 3)).sub(&one.sub(&p4).pow(2).mul(&x1));
    let h2 = x1.pow(3).mul(&x1.pow(2).sub(&x2)).add(&x2.scale(&q(1, 2)).mul(&f2));
    let g1 = x1.pow(2).sub(&x2).mul(&h1).sub(&x1.mul(&h2));
    let g2 = f2.mul(&h1).sub(&x2.scale(&q(2, 1)).mul(&h2));
    let s = h1.mul(&one.sub(&p4));
    let spec = CompactificationSpec::new(vec![1, 2], vec![2, 1], 2, 1, Kind::Parabolic).expect("valid");
    PolyField::new("example3", vec![g1, g2], Some(spec), Some(TimeFactor::Poly(s))).expect("example 3")
}

/// Certified real eigenpair, normalized so one component equals 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub value: Interval,
    pub vector: Vec<Interval>,
}

/// Certified complex pair `a ± ib` with eigenvector `u ± iv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexEigen {
    pub re: Interval,
    pub im: Interval,
    pub u: Vec<Interval>,
    pub v: Vec<Interval>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifiedEquilibrium {
    pub location: Vec<Interval>,
    /// Box in which the zero is unique.
    pub uniqueness_box: Vec<Interval>,
    pub on_horizon: bool,
    pub real_pairs: Vec<EigenPair>,
    pub complex_pairs: Vec<ComplexEigen>,
    pub stable_count: usize,
}

impl VerifiedEquilibrium {
    pub fn eigenvalues(&self) -> Vec<Interval> {
        self.real_pairs.iter().map(|p| p.value).collect()
    }

    /// Real stable eigenpairs sorted by increasing `|λ|`.
    pub fn stable_pairs(&self) -> Vec<EigenPair> {
        let mut v: Vec<EigenPair> = self.real_pairs.iter().filter(|p| p.value.is_negative()).cloned().collect();
        v.sort_by(|a, b| b.value.mid().partial_cmp(&a.value.mid()).unwrap());
        v
    }

    /// Real unstable eigenpairs sorted by increasing `λ`.
    pub fn unstable_pairs(&self) -> Vec<EigenPair> {
        let mut v: Vec<EigenPair> = self.real_pairs.iter().filter(|p| p.value.is_positive()).cloned().collect();
        v.sort_by(|a, b| a.value.mid().partial_cmp(&b.value.mid()).unwrap());
        v
    }

    pub fn is_source(&self) -> bool {
        self.real_pairs.iter().all(|p| p.value.is_positive()) && self.complex_pairs.iter().all(|c| c.re.is_positive())
    }

    pub fn is_sink(&self) -> bool {
        self.real_pairs.iter().all(|p| p.value.is_negative()) && self.complex_pairs.iter().all(|c| c.re.is_negative())
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.location.iter().map(|x| x.mid()).collect()
    }
}

/// Krawczyk proof of a unique zero of `g` near `guess`, then certified
/// eigenpairs of `Dg` over the enclosure.
pub fn verify_equilibrium(g: &PolyField, guess: &[f64], box_radius: f64) -> Result<VerifiedEquilibrium, FieldError> {
    let n = g.n();
    if guess.len() != n {
        return Err(FieldError::Shape(format!("guess has {} entries, field has n={n}", guess.len())));
    }
    let loc = linalg::verify_zero(
        guess,
        |x| g.eval(x),
        |x| g.jacobian(x),
        |x| g.eval(x),
        |x| g.jacobian(x),
        box_radius,
    )
    .map_err(|e| FieldError::NoContraction(format!("equilibrium near {guess:?}: {e}")))?;
    let center: Vec<f64> = loc.iter().map(|x| x.mid()).collect();
    // the Krawczyk box actually used is not returned; recover a uniqueness box
    let uniq = uniqueness_box(g, &center, &loc);
    let on_horizon = certify_on_horizon(g, &loc, &uniq);
    let jac = g.jacobian(&loc);
    let (real_pairs, complex_pairs) = certify_eigen(&jac)?;
    for p in &real_pairs {
        if p.value.contains_zero() {
            return Err(FieldError::NonHyperbolic(p.value));
        }
    }
    for c in &complex_pairs {
        if c.re.contains_zero() {
            return Err(FieldError::NonHyperbolic(c.re));
        }
    }
    let stable_count = real_pairs.iter().filter(|p| p.value.is_negative()).count()
        + 2 * complex_pairs.iter().filter(|c| c.re.is_negative()).count();
    Ok(VerifiedEquilibrium { location: loc, uniqueness_box: uniq, on_horizon, real_pairs, complex_pairs, stable_count })
}

fn uniqueness_box(g: &PolyField, center: &[f64], loc: &[Interval]) -> Vec<Interval> {
    let f_mid = g.eval(&center.iter().map(|&v| Interval::point(v)).collect::<Vec<_>>());
    let mut best = loc.to_vec();
    let mut r = loc.iter().map(|x| x.width()).fold(1e-14, f64::max);
    for _ in 0..14 {
        let b: Vec<Interval> = center.iter().map(|&c| Interval::point(c).inflate(r)).collect();
        if linalg::krawczyk_step(center, &b, &f_mid, &g.jacobian(&b)).is_ok() {
            best = b;
        } else {
            break;
        }
        r *= 10.0;
    }
    best
}

/// Proves the equilibrium lies on the horizon by solving `g` with one
/// component replaced by the horizon equation, using horizon invariance.
fn certify_on_horizon(g: &PolyField, loc: &[Interval], uniq: &[Interval]) -> bool {
    let Some(spec) = g.spec() else { return false };
    let (h, level) = spec.horizon_function();
    if !h.eval_interval(loc).contains(level) {
        return false;
    }
    let n = g.n();
    let grad: Vec<Poly> = (0..n).map(|j| h.deriv(j)).collect();
    let center: Vec<f64> = loc.iter().map(|x| x.mid()).collect();
    let i0 = (0..n)
        .max_by(|&a, &b| grad[a].eval_f64(&center).abs().partial_cmp(&grad[b].eval_f64(&center).abs()).unwrap())
        .unwrap();
    let lvl = Interval::point(level);
    let fi = |x: &[Interval]| {
        let mut v = g.eval(x);
        v[i0] = h.eval_interval(x) - lvl;
        v
    };
    let dfi = |x: &[Interval]| {
        let mut m = g.jacobian(x);
        m[i0] = grad.iter().map(|p| p.eval_interval(x)).collect();
        m
    };
    let f_mid = fi(&center.iter().map(|&v| Interval::point(v)).collect::<Vec<_>>());
    let b: Vec<Interval> = uniq.to_vec();
    let Ok(k) = linalg::krawczyk_step(&center, &b, &f_mid, &dfi(&b)) else { return false };
    !grad[i0].eval_interval(&k).contains_zero() && k.iter().zip(uniq).all(|(a, u)| a.subset_of(u))
}

fn certify_eigen(m: &Mat<Interval>) -> Result<(Vec<EigenPair>, Vec<ComplexEigen>), FieldError> {
    let mm = linalg::mid(m);
    let dm = linalg::to_dmatrix(&mm);
    let evs = dm.clone().complex_eigenvalues();
    let mut reals = Vec::new();
    let mut complexes = Vec::new();
    let scale = evs.iter().map(|z| z.norm()).fold(1e-300, f64::max);
    for z in evs.iter() {
        if z.im.abs() <= 1e-12 * scale {
            reals.push(z.re);
        } else if z.im > 0.0 {
            complexes.push(*z);
        }
    }
    let mut real_pairs = Vec::new();
    for lam in reals {
        let v = real_null_vector(&dm, lam);
        let k = argmax_abs(&v);
        let v: Vec<f64> = v.iter().map(|x| x / v[k]).collect();
        let pair = certify_real_pair(m, &mm, lam, &v, k)?;
        real_pairs.push(pair);
    }
    let mut complex_pairs = Vec::new();
    for z in complexes {
        let (u, v, k) = complex_null_vector(&dm, z);
        complex_pairs.push(certify_complex_pair(m, &mm, z, &u, &v, k)?);
    }
    Ok((real_pairs, complex_pairs))
}

fn argmax_abs(v: &[f64]) -> usize {
    (0..v.len()).max_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap()).unwrap()
}

fn real_null_vector(m: &DMatrix<f64>, lam: f64) -> Vec<f64> {
    let n = m.nrows();
    let a = m - DMatrix::identity(n, n) * lam;
    let svd = a.svd(false, true);
    let vt = svd.v_t.unwrap();
    let (imin, _) = svd.singular_values.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &s)| {
        if s < acc.1 {
            (i, s)
        } else {
            acc
        }
    });
    (0..n).map(|j| vt[(imin, j)]).collect()
}

fn complex_null_vector(m: &DMatrix<f64>, z: Complex<f64>) -> (Vec<f64>, Vec<f64>, usize) {
    let n = m.nrows();
    let a = DMatrix::from_fn(n, n, |i, j| Complex::new(m[(i, j)], 0.0) - if i == j { z } else { Complex::new(0.0, 0.0) });
    let svd = a.svd(false, true);
    let vt = svd.v_t.unwrap();
    let (imin, _) = svd.singular_values.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &s)| {
        if s < acc.1 {
            (i, s)
        } else {
            acc
        }
    });
    // rows of V^H are conjugated right singular vectors
    let w: Vec<Complex<f64>> = (0..n).map(|j| vt[(imin, j)].conj()).collect();
    let k = (0..n).max_by(|&a, &b| w[a].norm().partial_cmp(&w[b].norm()).unwrap()).unwrap();
    let w: Vec<Complex<f64>> = w.iter().map(|x| x / w[k]).collect();
    (w.iter().map(|x| x.re).collect(), w.iter().map(|x| x.im).collect(), k)
}

fn certify_real_pair(m: &Mat<Interval>, mm: &Mat<f64>, lam: f64, v: &[f64], k: usize) -> Result<EigenPair, FieldError> {
    let n = m.len();
    // unknowns z = (λ, ξ without component k)
    let unpack = |z: &[Interval]| -> (Interval, Vec<Interval>) {
        let mut xi = Vec::with_capacity(n);
        let mut it = z[1..].iter();
        for j in 0..n {
            xi.push(if j == k { Interval::ONE } else { *it.next().unwrap() });
        }
        (z[0], xi)
    };
    let unpack_f = |z: &[f64]| -> (f64, Vec<f64>) {
        let mut xi = Vec::with_capacity(n);
        let mut it = z[1..].iter();
        for j in 0..n {
            xi.push(if j == k { 1.0 } else { *it.next().unwrap() });
        }
        (z[0], xi)
    };
    let others: Vec<usize> = (0..n).filter(|&j| j != k).collect();
    let f = |z: &[f64]| {
        let (l, xi) = unpack_f(z);
        let mx = linalg::mat_vec(mm, &xi);
        (0..n).map(|i| mx[i] - l * xi[i]).collect::<Vec<f64>>()
    };
    let df = |z: &[f64]| {
        let (l, xi) = unpack_f(z);
        (0..n)
            .map(|i| {
                let mut row = vec![-xi[i]];
                for &j in &others {
                    row.push(mm[i][j] - if i == j { l } else { 0.0 });
                }
                row
            })
            .collect::<Mat<f64>>()
    };
    let fi = |z: &[Interval]| {
        let (l, xi) = unpack(z);
        let mx = linalg::mat_vec(m, &xi);
        (0..n).map(|i| mx[i] - l * xi[i]).collect::<Vec<Interval>>()
    };
    let dfi = |z: &[Interval]| {
        let (l, xi) = unpack(z);
        (0..n)
            .map(|i| {
                let mut row = vec![-xi[i]];
                for &j in &others {
                    row.push(if i == j { m[i][j] - l } else { m[i][j] });
                }
                row
            })
            .collect::<Mat<Interval>>()
    };
    let mut z0 = vec![lam];
    z0.extend(others.iter().map(|&j| v[j]));
    let z = linalg::verify_zero(&z0, f, df, fi, dfi, 1e-13).map_err(|e| {
        FieldError::NoContraction(format!("eigenpair near λ = {lam}: {e}"))
    })?;
    let (value, vector) = unpack(&z);
    Ok(EigenPair { value, vector })
}

fn certify_complex_pair(
    m: &Mat<Interval>,
    mm: &Mat<f64>,
    z: Complex<f64>,
    u: &[f64],
    v: &[f64],
    k: usize,
) -> Result<ComplexEigen, FieldError> {
    let n = m.len();
    let others: Vec<usize> = (0..n).filter(|&j| j != k).collect();
    // unknowns (a, b, u without k, v without k); u_k = 1, v_k = 0
    fn unpack<T: Scalar>(zz: &[T], n: usize, k: usize) -> (T, T, Vec<T>, Vec<T>) {
        let mut uu = Vec::with_capacity(n);
        let mut vv = Vec::with_capacity(n);
        let mut iu = zz[2..2 + n - 1].iter();
        let mut iv = zz[2 + n - 1..].iter();
        for j in 0..n {
            if j == k {
                uu.push(T::one());
                vv.push(T::zero());
            } else {
                uu.push(*iu.next().unwrap());
                vv.push(*iv.next().unwrap());
            }
        }
        (zz[0], zz[1], uu, vv)
    }
    fn resid<T: Scalar>(mat: &Mat<T>, zz: &[T], n: usize, k: usize) -> Vec<T> {
        let (a, b, uu, vv) = unpack(zz, n, k);
        let mu = linalg::mat_vec(mat, &uu);
        let mv = linalg::mat_vec(mat, &vv);
        let mut out = Vec::with_capacity(2 * n);
        for i in 0..n {
            out.push(mu[i] - a * uu[i] + b * vv[i]);
        }
        for i in 0..n {
            out.push(mv[i] - b * uu[i] - a * vv[i]);
        }
        out
    }
    fn jac<T: Scalar>(mat: &Mat<T>, zz: &[T], n: usize, k: usize, others: &[usize]) -> Mat<T> {
        let (a, b, uu, vv) = unpack(zz, n, k);
        let mut rows = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut r = vec![-uu[i], vv[i]];
            for &j in others {
                r.push(if i == j { mat[i][j] - a } else { mat[i][j] });
            }
            for &j in others {
                r.push(if i == j { b } else { T::zero() });
            }
            rows.push(r);
        }
        for i in 0..n {
            let mut r = vec![-vv[i], -uu[i]];
            for &j in others {
                r.push(if i == j { -b } else { T::zero() });
            }
            for &j in others {
                r.push(if i == j { mat[i][j] - a } else { mat[i][j] });
            }
            rows.push(r);
        }
        rows
    }
    let mut z0 = vec![z.re, z.im];
    z0.extend(others.iter().map(|&j| u[j]));
    z0.extend(others.iter().map(|&j| v[j]));
    let sol = linalg::verify_zero(
        &z0,
        |zz| resid(mm, zz, n, k),
        |zz| jac(mm, zz, n, k, &others),
        |zz| resid(m, zz, n, k),
        |zz| jac(m, zz, n, k, &others),
        1e-13,
    )
    .map_err(|_| FieldError::ComplexPair { re: z.re, im: z.im })?;
    let (a, b, uu, vv) = unpack(&sol, n, k);
    Ok(ComplexEigen { re: a, im: b, u: uu, v: vv })
}

/// Checks `α·λ ≠ λ_j` for all `|α| ≥ 2`; returns the smallest gap.
///
/// Beyond `|α| > max|λ| / min|λ|` resonance is impossible since then
/// `|α·λ| > max|λ|`, so only finitely many indices are checked.
pub fn check_nonresonance(lambdas: &[Interval], n_max: usize) -> Result<f64, FieldError> {
    if lambdas.iter().any(|l| !l.is_negative()) {
        return Err(FieldError::ResonancePossible("eigenvalues must all be negative".into()));
    }
    let m = lambdas.len();
    let max = lambdas.iter().map(|l| l.mag()).fold(0.0, f64::max);
    let min = lambdas.iter().map(|l| l.mig()).fold(f64::INFINITY, f64::min);
    let cutoff = ((max / min).ceil() as usize + 1).min(n_max.max(2));
    let exps = crate::series::exponents(m, cutoff);
    let mut gap = f64::INFINITY;
    for i in 0..exps.len() / m {
        let a = &exps[i * m..(i + 1) * m];
        if a.iter().sum::<u32>() < 2 {
            continue;
        }
        let dot: Interval = a.iter().zip(lambdas).map(|(&k, l)| *l * Interval::point(k as f64)).sum();
        for (j, l) in lambdas.iter().enumerate() {
            let d = dot - *l;
            if d.contains_zero() {
                return Err(FieldError::ResonancePossible(format!("alpha = {a:?}, j = {j}: {d}")));
            }
            gap = gap.min(d.mig());
        }
    }
    Ok(gap)
}

/// `Σ_i 2β_i x_i^{2β_i-1} g_i(x)`, the derivative of `p^{2c}` along `g`.
pub fn radial_derivative(g: &PolyField, x: &[Interval]) -> Option<Interval> {
    let spec = g.spec()?;
    let (h, _) = spec.horizon_function();
    let gx = g.eval(x);
    Some((0..g.n()).map(|i| h.deriv(i).eval_interval(x) * gx[i]).sum())
}

/// Exact coefficient check of `g(σx) = -σ g(x)` for `σ(x1, x2) = (-x1, x2)`.
pub fn reversal_symmetric(g: &PolyField) -> bool {
    if g.n() != 2 {
        return false;
    }
    let sigma = [Poly::var(2, 0).neg(), Poly::var(2, 1)];
    let lhs: Vec<Poly> = g.comps().iter().map(|p| p.compose(&sigma)).collect();
    lhs[0] == g.comps()[0] && lhs[1] == g.comps()[1].neg()
}
