//! Blow-up time enclosures from certified charts.
//!
//! Along a chart orbit `x(τ) = P(e^{Λτ}θ)`, so for a time factor `S` with
//! `S(P(0)) = 0` the original time to blow-up is
//! `t_max(θ) = ∫_0^∞ S(P(e^{Λτ}θ)) dτ = −Σ_{|α|>0} (S∘P)_α θ^α / (α·λ)`.
//! Every routine below builds the coefficients of `t_max` as a series with a
//! uniform error bound `E`; on the polydisc `|t_max(θ) − Σ t_α θ^α| ≤ E |θ|_∞`,
//! because the perturbation has no constant term.

use serde::Serialize;
use thiserror::Error;

use crate::compactify::Kind;
use crate::field::TimeFactor;
use crate::integrate::TrajectoryEnclosure;
use crate::interval::Interval;
use crate::manifold::{ManifoldChart, ManifoldError};
use crate::series::{exponents, Series, SeriesError};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum BlowtimeError {
    #[error("theta {0} lies outside the unit polydisc")]
    Domain(String),
    #[error("formula does not apply: {0}")]
    Validity(String),
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("division certificate failed at {bound}: {detail}")]
    VerificationFailed { bound: &'static str, detail: String },
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

/// `t_max(θ) ∈ Σ t_α θ^α + [−E, E] |θ|_∞` on the closed unit polydisc.
#[derive(Clone, Debug)]
pub struct TmaxSeries {
    pub coeffs: Series,
    pub error: f64,
}

impl TmaxSeries {
    pub fn m(&self) -> usize {
        self.coeffs.m()
    }

    pub fn eval(&self, theta: &[Interval]) -> Result<Interval, BlowtimeError> {
        if theta.len() != self.m() {
            return Err(BlowtimeError::Domain(format!("{} coordinates for m = {}", theta.len(), self.m())));
        }
        let unit = Interval::from_bounds(-1.0, 1.0);
        if let Some(t) = theta.iter().find(|t| !t.subset_of(&unit)) {
            return Err(BlowtimeError::Domain(t.to_string()));
        }
        let size = theta.iter().map(|t| t.mag()).fold(0.0, f64::max);
        let err = (Interval::point(self.error) * Interval::point(size)).hi();
        Ok(self.coeffs.eval_unchecked(theta) + Interval::symmetric(err))
    }

    pub fn eval_point(&self, theta: &[f64]) -> Result<Interval, BlowtimeError> {
        let t: Vec<Interval> = theta.iter().map(|&v| Interval::point(v)).collect();
        self.eval(&t)
    }

    /// Float value of the polynomial part.
    pub fn eval_f64(&self, theta: &[f64]) -> f64 {
        self.coeffs.eval_f64(theta)
    }

    /// Term-by-term derivative `Σ j t_j θ^{j−1}` (one-dimensional charts).
    pub fn derivative_f64(&self, theta: f64) -> f64 {
        let c = self.coeffs.coeffs();
        (1..c.len()).rev().fold(0.0, |acc, j| acc * theta + j as f64 * c[j].mid())
    }

    /// Coefficients of the one-dimensional series.
    pub fn coefficients_f64(&self) -> Vec<f64> {
        self.coeffs.coeffs().iter().map(|c| c.mid()).collect()
    }
}

/// Copy of a chart component without its tail.
fn bare(s: &Series) -> Series {
    Series::from_coeffs(s.m(), s.degree(), s.coeffs().to_vec(), 0.0).expect("same shape")
}

/// `ᾱ·λ` for every stored multi-index of a series of degree `deg`.
fn exponent_weights(chart: &ManifoldChart, deg: usize) -> Vec<Interval> {
    let m = chart.m();
    let lam = &chart.skeleton.lambda;
    let exps = exponents(m, deg);
    (0..exps.len() / m).map(|i| (0..m).map(|k| lam[k] * Interval::point(exps[i * m + k] as f64)).sum()).collect()
}

/// `min_j |λ_j|`, the smallest `|α·λ|` over `|α| ≥ 1`.
fn spectral_gap(chart: &ManifoldChart) -> Interval {
    let g = chart.skeleton.lambda.iter().map(|l| l.mig()).fold(f64::INFINITY, f64::min);
    Interval::point(g)
}

/// `−c_α / (α·λ)` for `|α| > 0`, zero constant term.
fn integrate_against_exponentials(chart: &ManifoldChart, c: &Series, sign: f64) -> Series {
    let w = exponent_weights(chart, c.degree());
    let mut out = Series::zeros(c.m(), c.degree());
    for (i, (v, wi)) in c.coeffs().iter().zip(&w).enumerate().skip(1) {
        out.coeffs_mut()[i] = (*v / *wi).scale(-sign);
    }
    out
}

/// `(‖a‖ + r)^k − ‖a‖^k`, the growth of a `k`-th power under a perturbation of size `r`.
fn power_inflation(norm: f64, r: f64, k: u32) -> f64 {
    let a = Interval::point(norm);
    ((a + Interval::point(r)).int_pow(k) - a.int_pow(k)).hi()
}

fn require_on_horizon(chart: &ManifoldChart) -> Result<(), BlowtimeError> {
    if chart.equilibrium.on_horizon {
        Ok(())
    } else {
        Err(BlowtimeError::Precondition("chart base point is not certified on the horizon".into()))
    }
}

/// `−Σ (a_c^k)_α θ^α / (α·λ)`: the blow-up time for `S = x_c^k` in a
/// directional chart whose horizon coordinate is `x_c`.
pub fn directional_series(chart: &ManifoldChart, comp: usize, k: u32) -> Result<TmaxSeries, BlowtimeError> {
    if comp >= chart.n() || k == 0 {
        return Err(BlowtimeError::Precondition(format!("component {comp}, power {k}")));
    }
    let mut a = bare(&chart.coeffs.comps[comp]);
    if !a.coeffs()[0].contains_zero() {
        return Err(BlowtimeError::Precondition(format!("(a_{comp})_0 = {} is not zero", a.coeffs()[0])));
    }
    let horizon_coordinate = matches!(
        chart.field.spec().map(|s| s.kind),
        Some(Kind::Directional { index, .. }) if index == comp
    );
    if !(horizon_coordinate && chart.equilibrium.on_horizon) {
        return Err(BlowtimeError::Precondition(format!("x_{} is not a certified horizon coordinate", comp + 1)));
    }
    a.coeffs_mut()[0] = Interval::ZERO;
    let ak = a.pow(k, None);
    let coeffs = integrate_against_exponentials(chart, &ak, 1.0);
    let pert = power_inflation(a.coef_norm(), chart.r0(), k);
    let error = (Interval::point(pert) / spectral_gap(chart)).hi();
    Ok(TmaxSeries { coeffs, error })
}

pub fn tmax_directional_series(chart: &ManifoldChart, comp: usize, k: u32, theta: &[f64]) -> Result<Interval, BlowtimeError> {
    directional_series(chart, comp, k)?.eval_point(theta)
}

/// Homogeneous Poincaré charts with `S = 1 − |x|²`:
/// `t_max = Σ_{|α|>0} (Σ_i a_i ∗ a_i)_α θ^α / (α·λ)`.
pub fn poincare_series(chart: &ManifoldChart) -> Result<TmaxSeries, BlowtimeError> {
    let spec = chart.field.spec().ok_or_else(|| BlowtimeError::Precondition("no compactification".into()))?;
    if spec.kind != Kind::Poincare || spec.alpha.iter().any(|&a| a != 1) || !spec.k_over_2c_integral() {
        return Err(BlowtimeError::Precondition("needs a homogeneous Poincaré chart with k/2c integral".into()));
    }
    require_on_horizon(chart)?;
    let comps: Vec<Series> = chart.coeffs.comps.iter().map(bare).collect();
    let mut sq = comps[0].mul(&comps[0]);
    for c in &comps[1..] {
        sq = sq.add(&c.mul(c));
    }
    let coeffs = integrate_against_exponentials(chart, &sq, -1.0);
    let r0 = Interval::point(chart.r0());
    let gap = spectral_gap(chart);
    let norms: Interval = comps.iter().map(|c| Interval::point(c.coef_norm())).sum();
    let n = Interval::point(chart.n() as f64);
    let delta = Interval::point(2.0) * norms * r0 / gap + n * r0.sqr() / gap;
    Ok(TmaxSeries { coeffs, error: delta.hi() })
}
/// Poincaré `t_max` at `θ`; `Validity` when `P(θ)` lies certainly beyond the horizon.
/// Poincaré `t_max` at `θ`, after checking `|P(θ)|² < 1`.
pub fn tmax_poincare_homogeneous(chart: &ManifoldChart, theta: &[f64]) -> Result<Interval, BlowtimeError> {
    tmax_poincare_with(&poincare_series(chart)?, chart, theta)
}

pub fn tmax_poincare_with(series: &TmaxSeries, chart: &ManifoldChart, theta: &[f64]) -> Result<Interval, BlowtimeError> {
    if theta.iter().all(|&t| t == 0.0) {
        return series.eval_point(theta);
    }
    let th: Vec<Interval> = theta.iter().map(|&t| Interval::point(t)).collect();
    let p = chart.eval(&th)?;
    let r2: Interval = p.iter().map(|v| v.sqr()).sum();
    if r2.lo() > 1.0 {
        return Err(BlowtimeError::Validity(format!("|P(θ)|² = {r2} lies beyond the horizon")));
    }
    series.eval(&th)
}

/// Quasi-parabolic chart of the type-(1,2) example with
/// `S = ¼(1 + 3p⁴)(1 − p⁴)`, `p⁴ = x1⁴ + x2²`. With `C = p⁴∘P − 1`,
/// `S∘P = −C − ¾C²`, so `t_max = Σ_{j≥1} (C + ¾C²)_j θ^j / (jλ)`.
pub fn parabolic_series_example3(chart: &ManifoldChart) -> Result<TmaxSeries, BlowtimeError> {
    let spec = chart.field.spec().ok_or_else(|| BlowtimeError::Precondition("no compactification".into()))?;
    if spec.kind != Kind::Parabolic || spec.beta != [2, 1] || chart.n() != 2 {
        return Err(BlowtimeError::Precondition("needs the type-(1,2) parabolic chart".into()));
    }
    require_on_horizon(chart)?;
    let a1 = bare(&chart.coeffs.comps[0]);
    let a2 = bare(&chart.coeffs.comps[1]);
    let mut c = a1.pow(4, None).add(&a2.pow(2, None).extend_to(4 * a1.degree()));
    if !c.coeffs()[0].contains(1.0) {
        return Err(BlowtimeError::Precondition(format!("horizon identity gives {}", c.coeffs()[0])));
    }
    c.coeffs_mut()[0] = Interval::ZERO;
    let c2 = c.mul(&c);
    let s = c.extend_to(c2.degree()).add(&c2.scale(Interval::point(0.75)));
    let coeffs = integrate_against_exponentials(chart, &s, -1.0);
    let r0 = chart.r0();
    let dc = Interval::point(power_inflation(a1.coef_norm(), r0, 4)) + Interval::point(power_inflation(a2.coef_norm(), r0, 2));
    let cn = Interval::point(c.coef_norm());
    let ds = dc + Interval::point(0.75) * (Interval::point(2.0) * cn + dc) * dc;
    Ok(TmaxSeries { coeffs, error: (ds / spectral_gap(chart)).hi() })
}

pub fn tmax_parabolic_example3(chart: &ManifoldChart, theta: &[f64]) -> Result<Interval, BlowtimeError> {
    parabolic_series_example3(chart)?.eval_point(theta)
}

/// Any polynomial time factor vanishing at the chart's base point:
/// `t_max = −Σ (S∘P)_α θ^α / (α·λ)`, with the perturbation of `S∘P` bounded
/// through the absolute-coefficient polynomial of `S`.
pub fn polynomial_series(chart: &ManifoldChart) -> Result<TmaxSeries, BlowtimeError> {
    let Some(TimeFactor::Poly(s)) = chart.field.timefactor() else {
        return Err(BlowtimeError::Precondition("needs a polynomial time factor".into()));
    };
    let n = chart.n();
    let comps: Vec<Series> = chart.coeffs.comps.iter().map(bare).collect();
    let all = chart.field.program().eval_series(&comps, None);
    let mut sp = all[chart.field.time_output()].clone();
    let s0 = s.eval_interval(&chart.equilibrium.location);
    if !s0.contains_zero() || !sp.coeffs()[0].contains_zero() {
        return Err(BlowtimeError::Precondition(format!("S at the base point is {s0}")));
    }
    require_on_horizon(chart)?;
    sp.coeffs_mut()[0] = Interval::ZERO;
    let coeffs = integrate_against_exponentials(chart, &bare(&sp), 1.0);
    let abs = s.abs_coeffs();
    let norms: Vec<Interval> = comps.iter().map(|c| Interval::point(c.coef_norm())).collect();
    let wide: Vec<Interval> = norms.iter().map(|v| *v + Interval::point(chart.r0())).collect();
    let growth = abs.eval_interval(&wide) - abs.eval_interval(&norms);
    let _ = n;
    Ok(TmaxSeries { coeffs, error: (Interval::point(growth.hi()) / spectral_gap(chart)).hi() })
}

/// Certificate of the division `R = Q / P₁²` behind the rational time factor.
#[derive(Clone, Debug, Serialize)]
pub struct DivisionCertificate {
    pub y0: f64,
    pub z1: f64,
    pub norm_a: f64,
    pub r_min: f64,
    pub n_trunc: usize,
}

/// Rational time factor `S = x2 / x1²` of the directional example.
/// With `Q(u) = P₂(u)/u` and `R = Q / P₁²`, `t_max = −(1/λ) Σ r_n θ^{n+1}/(n+1)`.
/// `R` is verified as the zero of the linear map `ψ(r) = a₁² r − q` by a
/// radii-polynomial argument with `Z0 = 0` and `Z2 = 0`.
pub fn rational_series_example1(chart: &ManifoldChart) -> Result<(TmaxSeries, DivisionCertificate), BlowtimeError> {
    match chart.field.timefactor() {
        Some(TimeFactor::Rational { .. }) if chart.m() == 1 && chart.n() == 2 => {}
        _ => return Err(BlowtimeError::Precondition("needs a one-dimensional chart with S = x2/x1²".into())),
    }
    let horizon_second = matches!(chart.field.spec().map(|s| s.kind), Some(Kind::Directional { index: 1, .. }));
    if !(horizon_second && chart.equilibrium.on_horizon) {
        return Err(BlowtimeError::Precondition("x2 is not a certified horizon coordinate".into()));
    }
    let nt = chart.n_trunc();
    let a1 = bare(&chart.coeffs.comps[0]);
    let a2 = bare(&chart.coeffs.comps[1]);
    if a1.coeffs()[0].contains_zero() {
        return Err(BlowtimeError::Precondition("P₁(0) is not bounded away from zero".into()));
    }
    let r0 = Interval::point(chart.r0());
    // q_n = (a₂)_{n+1}; the constant of a₂ is exactly zero on the horizon
    let q: Vec<Interval> = a2.coeffs()[1..].to_vec();
    let w = a1.mul(&a1);
    let wc = w.coeffs();
    // float forward substitution for r̄
    let mut rbar = vec![0.0f64; nt + 1];
    for n in 0..=nt {
        let mut acc = q.get(n).map_or(0.0, |v| v.mid());
        for k in 1..=n {
            acc -= wc[k].mid() * rbar[n - k];
        }
        rbar[n] = acc / wc[0].mid();
    }
    let rb = Series::from_floats(1, nt, &rbar)?;
    // ψ̄(r̄) = a₁² r̄ − q over all degrees
    let prod = w.mul(&rb);
    let mut psi: Vec<Interval> = prod.coeffs().to_vec();
    for (n, qn) in q.iter().enumerate() {
        psi[n] -= *qn;
    }
    let w0 = wc[0];
    // A^{(N)} is the inverse of the lower-triangular Toeplitz matrix of w
    let apply = |v: &[Interval]| -> Vec<Interval> {
        let mut y: Vec<Interval> = Vec::with_capacity(v.len());
        for n in 0..v.len() {
            let mut acc = v[n];
            for k in 1..=n.min(wc.len() - 1) {
                acc -= wc[k] * y[n - k];
            }
            y.push(acc / w0);
        }
        y
    };
    let mut unit = vec![Interval::ZERO; nt + 1];
    unit[0] = Interval::ONE;
    let inv_col = apply(&unit);
    let a_fin: Interval = inv_col.iter().map(|v| Interval::point(v.mag())).sum();
    let inv_w0 = Interval::ONE / Interval::point(w0.mig());
    let norm_a = a_fin.hi().max(inv_w0.hi());
    let na = Interval::point(norm_a);
    let y_fin: Interval = apply(&psi[..=nt]).iter().map(|v| Interval::point(v.mag())).sum();
    let y_tail: Interval = psi[nt + 1..].iter().map(|v| Interval::point(v.mag())).sum::<Interval>() * inv_w0;
    let a1n = Interval::point(a1.coef_norm());
    let rn = Interval::point(rb.coef_norm());
    let y0 = y_fin + y_tail + na * (Interval::point(2.0) * a1n * rn + rn * r0 + Interval::ONE) * r0;
    let beta: Interval = wc[1..].iter().map(|v| Interval::point(v.mag())).sum();
    let z1 = na * (Interval::point(2.0) * r0 * a1n + r0.sqr())
        + inv_w0 * (beta + Interval::point(2.0) * a1n * r0 + r0.sqr());
    if !(z1.hi() < 1.0) {
        return Err(BlowtimeError::VerificationFailed { bound: "Z1", detail: format!("Z1 = {:e} is not below 1", z1.hi()) });
    }
    let r_min = (y0 / (Interval::ONE - z1)).hi();
    if !r_min.is_finite() {
        return Err(BlowtimeError::VerificationFailed { bound: "Y0", detail: format!("Y0 = {:e}", y0.hi()) });
    }
    let lam = chart.skeleton.lambda[0];
    let mut coeffs = Series::zeros(1, nt + 1);
    for (n, &r) in rbar.iter().enumerate() {
        coeffs.coeffs_mut()[n + 1] = -(Interval::point(r) / (lam * Interval::point((n + 1) as f64)));
    }
    let error = (Interval::point(r_min) / Interval::point(lam.mig())).hi();
    let cert = DivisionCertificate { y0: y0.hi(), z1: z1.hi(), norm_a, r_min, n_trunc: nt };
    Ok((TmaxSeries { coeffs, error }, cert))
}

pub fn tmax_rational_example1(chart: &ManifoldChart, theta: &[f64]) -> Result<Interval, BlowtimeError> {
    rational_series_example1(chart)?.0.eval_point(theta)
}

/// Chart-appropriate `t_max` series for the bundled time factors.
pub fn tmax_series(chart: &ManifoldChart) -> Result<TmaxSeries, BlowtimeError> {
    match (chart.field.timefactor(), chart.field.spec().map(|s| s.kind)) {
        (Some(TimeFactor::Rational { .. }), _) => Ok(rational_series_example1(chart)?.0),
        (Some(TimeFactor::Poly(_)), Some(Kind::Poincare)) => poincare_series(chart),
        (Some(TimeFactor::Poly(_)), Some(Kind::Parabolic)) if chart.field.spec().map(|s| s.beta.clone()) == Some(vec![2, 1]) => {
            parabolic_series_example3(chart)
        }
        (Some(TimeFactor::Poly(_)), _) => polynomial_series(chart),
        (None, _) => Err(BlowtimeError::Precondition("model has no time factor".into())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowupTimeResult {
    pub local: Interval,
    pub passing: Interval,
    pub total: Interval,
    pub theta: Vec<f64>,
}

/// Chart-local time plus the passing time of a trajectory ending on the chart.
pub fn total_blowup_time(local: Interval, theta: &[f64], traj: Option<&TrajectoryEnclosure>) -> BlowupTimeResult {
    let passing = traj.map_or(Interval::ZERO, |t| t.passing_time);
    BlowupTimeResult { local, passing, total: local + passing, theta: theta.to_vec() }
}
