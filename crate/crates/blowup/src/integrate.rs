//! Validated Taylor integration of polynomial fields.
//!
//! Sets are carried in Lohner form `c + B r` (float center, float matrix,
//! interval vector). One step evaluates the Taylor polynomial of order
//! `p − 1` at the center, its Jacobian over the whole set from the
//! variational jet, and a Lagrange remainder over an a priori tube found by
//! inflation. The original time `∫ S dτ` is integrated term by term against
//! the same jets.

use std::io;

use serde::Serialize;
use thiserror::Error;

use crate::compactify::Kind;
use crate::field::{PolyField, TimeFactor, VerifiedEquilibrium};
use crate::interval::Interval;
use crate::linalg::{self, LinalgError, Mat, Scalar};
use crate::manifold::{ManifoldChart, ManifoldError};
use crate::program::{Incremental, Program};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum IntegrateError {
    #[error("no a priori enclosure for step h = {h:e}")]
    NoEnclosure { h: f64 },
    #[error("step size fell below {h_min:e} at tau = {tau}")]
    StepTooSmall { h_min: f64, tau: f64 },
    #[error("tube left the domain at tau = {tau} (horizon function up to {value})")]
    DomainExit { tau: f64, value: f64 },
    #[error("time factor: {0}")]
    TimeFactor(String),
    #[error("step limit {0} reached")]
    StepLimit(usize),
    #[error("trajectory did not enter the neighbourhood of the equilibrium")]
    NotEntered,
    #[error("no certified Lyapunov ball: {0}")]
    NoLyapunovBall(String),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("csv output: {0}")]
    Output(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    Forward,
    Backward,
}

/// Per-step remainder allowed relative to the current set width.
const WIDTH_FRACTION: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct IntegratorConfig {
    pub order: usize,
    pub h_max: f64,
    pub h_min: f64,
    /// Target size of the Taylor remainder, relative to `1 + |x|`.
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { order: 15, h_max: 0.5, h_min: 1e-9, tol: 1e-16, max_steps: 200_000 }
    }
}

/// Solution jet `x[i][k]` and variational jet `v[k][i][j]` from one
/// order-by-order sweep; `st` keeps the node coefficients for time-factor
/// outputs.
struct Jet<T> {
    x: Vec<Vec<T>>,
    v: Vec<Mat<T>>,
    st: Incremental<T>,
}

/// Taylor coefficients `0..=order` of the solution through `x0`, with the
/// variational coefficients `0..=order` when `variational` is set.
fn taylor<T: Scalar>(field: &PolyField, x0: &[T], order: usize, variational: bool) -> Jet<T> {
    let n = field.n();
    let prog: &Program = field.program();
    let mut x: Vec<Vec<T>> = x0.iter().map(|&v| vec![v; 1]).collect();
    for xi in &mut x {
        xi.resize(order + 1, T::zero());
    }
    let mut st = prog.incremental::<T>(order + 1);
    for k in 0..order {
        prog.step1(&mut st, k, &x);
        for i in 0..n {
            x[i][k + 1] = prog.output_at(&st, i, k).div_count(k + 1);
        }
    }
    prog.step1(&mut st, order, &x);
    let mut v: Vec<Mat<T>> = Vec::new();
    if variational {
        v.push(linalg::identity(n));
        let jac: Vec<Mat<T>> = (0..order)
            .map(|b| {
                (0..n).map(|i| (0..n).map(|j| prog.output_at(&st, field.jac_output(i, j), b)).collect()).collect()
            })
            .collect();
        for k in 0..order {
            let mut next = vec![vec![T::zero(); n]; n];
            for b in 0..=k {
                let prod = linalg::mat_mul(&jac[b], &v[k - b]);
                for i in 0..n {
                    for j in 0..n {
                        next[i][j] += prod[i][j];
                    }
                }
            }
            for row in &mut next {
                for e in row.iter_mut() {
                    *e = e.div_count(k + 1);
                }
            }
            v.push(next);
        }
    }
    Jet { x, v, st }
}

/// Coefficients `0..=order` of `S(x(τ))` along a jet.
fn time_series(field: &PolyField, jet: &Jet<Interval>, order: usize) -> Result<Vec<Interval>, IntegrateError> {
    let prog = field.program();
    let o = field.time_output();
    match field.timefactor() {
        None => Ok(vec![Interval::ZERO; order + 1]),
        Some(TimeFactor::Poly(_)) => Ok((0..=order).map(|k| prog.output_at(&jet.st, o, k)).collect()),
        Some(TimeFactor::Rational { .. }) => {
            let num: Vec<Interval> = (0..=order).map(|k| prog.output_at(&jet.st, o, k)).collect();
            let den: Vec<Interval> = (0..=order).map(|k| prog.output_at(&jet.st, o + 1, k)).collect();
            if den[0].contains_zero() {
                return Err(IntegrateError::TimeFactor(format!("denominator {} contains zero", den[0])));
            }
            let mut q: Vec<Interval> = Vec::with_capacity(order + 1);
            for k in 0..=order {
                let mut acc = num[k];
                for j in 0..k {
                    acc -= den[k - j] * q[j];
                }
                q.push(acc / den[0]);
            }
            Ok(q)
        }
    }
}

/// `Σ_k c_k t^k` over `t ∈ [0, h]`.
fn range_poly(c: &[Interval], h: f64) -> Interval {
    let t = Interval::from_bounds(0.0, h);
    let mut acc = Interval::ZERO;
    for ck in c.iter().rev() {
        acc = acc * t + *ck;
    }
    acc
}

/// `Σ_k c_k h^k` at the point `h`.
fn eval_poly(c: &[Interval], h: f64) -> Interval {
    let t = Interval::point(h);
    let mut acc = Interval::ZERO;
    for ck in c.iter().rev() {
        acc = acc * t + *ck;
    }
    acc
}

/// Set `{c + B r}` with float `c`, `B` and interval `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct LohnerSet {
    pub c: Vec<f64>,
    pub b: Mat<f64>,
    pub r: Vec<Interval>,
}

impl LohnerSet {
    pub fn from_box(bx: &[Interval]) -> LohnerSet {
        let c: Vec<f64> = bx.iter().map(|v| v.mid()).collect();
        let r = bx.iter().zip(&c).map(|(v, &m)| *v - m).collect();
        LohnerSet { c, b: linalg::identity(bx.len()), r }
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// Interval hull of the set.
    pub fn hull(&self) -> Vec<Interval> {
        let b = linalg::to_interval(&self.b);
        let br = linalg::mat_vec(&b, &self.r);
        self.c.iter().zip(br).map(|(&c, v)| v + c).collect()
    }

    pub fn max_width(&self) -> f64 {
        self.hull().iter().map(|v| v.width()).fold(0.0, f64::max)
    }
}

/// Result of one validated step.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub set: LohnerSet,
    /// Enclosure of the trajectory over the whole step.
    pub tube: Vec<Interval>,
    /// Enclosure of `∫_0^h S(x(τ)) dτ`.
    pub integral: Interval,
    /// Largest width of the Lagrange remainder term.
    pub remainder: f64,
}

/// A priori tube: `Σ_{k<p} x_k(X0)[0,h]^k + x_p(Y)[0,h]^p ⊆ Y`.
fn a_priori_tube(
    field: &PolyField,
    jet0: &Jet<Interval>,
    h: f64,
    order: usize,
) -> Result<(Vec<Interval>, Jet<Interval>), IntegrateError> {
    let n = field.n();
    let hp = Interval::from_bounds(0.0, h).int_pow(order as u32);
    let head: Vec<Interval> = (0..n).map(|i| range_poly(&jet0.x[i][..order], h)).collect();
    let mut y: Vec<Interval> = (0..n).map(|i| head[i] + jet0.x[i][order] * hp).collect();
    for round in 0..20 {
        let grow = 0.1 * (round + 1) as f64;
        y = y.iter().map(|v| v.inflate(grow * v.width() + 1e-15 * (1.0 + v.mag()))).collect();
        let jy = taylor(field, &y, order, false);
        let z: Vec<Interval> = (0..n).map(|i| head[i] + jy.x[i][order] * hp).collect();
        if z.iter().zip(&y).all(|(a, b)| a.interior_of(b)) {
            let jz = taylor(field, &z, order, true);
            return Ok((z, jz));
        }
        y = y.iter().zip(&z).map(|(a, b)| a.hull(b)).collect();
        if !y.iter().all(|v| v.mag().is_finite()) {
            break;
        }
    }
    Err(IntegrateError::NoEnclosure { h })
}

/// One Lohner step of length `h` (`h > 0`, forward in the field's time).
pub fn lohner_step(field: &PolyField, set: &LohnerSet, h: f64, order: usize) -> Result<StepOutcome, IntegrateError> {
    let n = set.n();
    let x0 = set.hull();
    let center: Vec<Interval> = set.c.iter().map(|&v| Interval::point(v)).collect();
    let jc = taylor(field, &center, order, false);
    let jx = taylor(field, &x0, order, true);
    let (tube, jt) = a_priori_tube(field, &jx, h, order)?;
    let hp = Interval::point(h).int_pow(order as u32);
    let rem: Vec<Interval> = (0..n).map(|i| jt.x[i][order] * hp).collect();
    let remainder = rem.iter().map(|v| v.width()).fold(0.0, f64::max);
    let u: Vec<Interval> = (0..n).map(|i| eval_poly(&jc.x[i][..order], h) + rem[i]).collect();
    let mut dp = vec![vec![Interval::ZERO; n]; n];
    let mut hk = Interval::ONE;
    for vk in jx.v[..order].iter().chain(&jt.v[order..]) {
        for i in 0..n {
            for j in 0..n {
                dp[i][j] += vk[i][j] * hk;
            }
        }
        hk = hk * h;
    }
    let m = linalg::mat_mul(&dp, &linalg::to_interval(&set.b));
    let c_new: Vec<f64> = u.iter().map(|v| v.mid()).collect();
    let (b_new, b_inv) = orthonormal_frame(&linalg::mid(&m), &set.r);
    let mr = linalg::mat_vec(&linalg::mat_mul(&b_inv, &m), &set.r);
    let du: Vec<Interval> = u.iter().zip(&c_new).map(|(v, &c)| *v - c).collect();
    let shift = linalg::mat_vec(&b_inv, &du);
    let r_new: Vec<Interval> = mr.iter().zip(&shift).map(|(a, b)| *a + *b).collect();
    let s_x = time_series(field, &jx, order)?;
    let s_t = time_series(field, &jt, order)?;
    let mut integral = Interval::ZERO;
    let mut hk = Interval::point(h);
    for (k, sk) in s_x[..order].iter().enumerate() {
        integral += (*sk * hk).div_count(k + 1);
        hk = hk * h;
    }
    integral += (s_t[order] * hk).div_count(order + 1);
    Ok(StepOutcome { set: LohnerSet { c: c_new, b: b_new, r: r_new }, tube, integral, remainder })
}

/// `Q` from a QR factorization of `a` with columns ordered by decreasing
/// `|a_j| rad(r_j)`, and a rigorous enclosure of `Q^{-1}`.
fn orthonormal_frame(a: &Mat<f64>, r: &[Interval]) -> (Mat<f64>, Mat<Interval>) {
    let n = a.len();
    let mut order: Vec<usize> = (0..n).collect();
    let weight = |j: usize| (0..n).map(|i| a[i][j] * a[i][j]).sum::<f64>().sqrt() * r[j].rad();
    order.sort_by(|&x, &y| weight(y).partial_cmp(&weight(x)).unwrap_or(std::cmp::Ordering::Equal));
    let permuted: Mat<f64> = (0..n).map(|i| order.iter().map(|&j| a[i][j]).collect()).collect();
    let q = linalg::qr_q(&permuted);
    if q.iter().flatten().all(|v| v.is_finite()) {
        if let Ok(inv) = linalg::inverse_interval(&linalg::to_interval(&q)) {
            return (q, inv);
        }
    }
    (linalg::identity(n), linalg::identity(n))
}

/// Single step from a box, in the shape of the classical interface.
pub fn rigorous_step(
    field: &PolyField,
    box0: &[Interval],
    h: f64,
    order: usize,
) -> Result<(Vec<Interval>, Vec<Interval>), IntegrateError> {
    let out = lohner_step(field, &LohnerSet::from_box(box0), h, order)?;
    Ok((out.set.hull(), out.tube))
}

/// One recorded step: `τ`-range (in the direction of integration), tube and
/// end box.
#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub tau: Interval,
    pub tube: Vec<Interval>,
    pub end: Vec<Interval>,
}

#[derive(Clone, Debug)]
pub struct TrajectoryEnclosure {
    pub start: Vec<Interval>,
    pub steps: Vec<StepRecord>,
    /// `∫ S dτ` over the whole trajectory (original time elapsed).
    pub passing_time: Interval,
    pub direction: Direction,
    /// Set at the end of the last step.
    pub set: LohnerSet,
    /// Total `τ` integrated, as the exact sum of the float step sizes.
    pub tau: Interval,
}

impl TrajectoryEnclosure {
    fn empty(start: &[Interval], direction: Direction) -> Self {
        TrajectoryEnclosure {
            start: start.to_vec(),
            steps: Vec::new(),
            passing_time: Interval::ZERO,
            direction,
            set: LohnerSet::from_box(start),
            tau: Interval::ZERO,
        }
    }

    pub fn end_box(&self) -> Vec<Interval> {
        self.steps.last().map_or_else(|| self.start.clone(), |s| s.end.clone())
    }

    /// CSV rows `tau_lo, tau_hi, x1_lo, x1_hi, …` of the tubes.
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<(), IntegrateError> {
        let n = self.start.len();
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["tau_lo".to_string(), "tau_hi".to_string()];
        for i in 1..=n {
            header.push(format!("x{i}_lo"));
            header.push(format!("x{i}_hi"));
        }
        let err = |e: csv::Error| IntegrateError::Output(e.to_string());
        wr.write_record(&header).map_err(err)?;
        for s in &self.steps {
            let mut row = vec![format!("{:e}", s.tau.lo()), format!("{:e}", s.tau.hi())];
            for v in &s.tube {
                row.push(format!("{:e}", v.lo()));
                row.push(format!("{:e}", v.hi()));
            }
            wr.write_record(&row).map_err(err)?;
        }
        wr.flush().map_err(|e| IntegrateError::Output(e.to_string()))
    }
}

/// Range of the horizon function on a box, for global compactifications.
fn horizon_range(field: &PolyField, bx: &[Interval]) -> Option<Interval> {
    let spec = field.spec()?;
    match spec.kind {
        Kind::Directional { .. } => None,
        Kind::Poincare | Kind::Parabolic => Some(spec.horizon_function().0.eval_interval(bx)),
    }
}

/// Step size from the decay of the last Taylor coefficients at `x`.
fn suggest_step(field: &PolyField, x: &[f64], cfg: &IntegratorConfig) -> f64 {
    let jet = taylor(field, x, cfg.order, false);
    let scale = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut h = cfg.h_max;
    for k in [cfg.order - 1, cfg.order] {
        let ck = jet.x.iter().map(|xi| xi[k].abs()).fold(0.0, f64::max);
        if ck > 0.0 {
            h = h.min((cfg.tol * scale / ck).powf(1.0 / k as f64));
        }
    }
    h.max(cfg.h_min)
}

/// Integrates `field` from `start` over `τ ∈ [0, tau]` in `direction`,
/// stopping early when `stop` returns true on a step's end box.
pub fn integrate_until<F>(
    field: &PolyField,
    start: &[Interval],
    tau: f64,
    direction: Direction,
    cfg: &IntegratorConfig,
    mut stop: F,
) -> Result<(TrajectoryEnclosure, bool), IntegrateError>
where
    F: FnMut(&[Interval]) -> bool,
{
    let g = match direction {
        Direction::Forward => field.clone(),
        Direction::Backward => field.negated(),
    };
    if let Some(v) = horizon_range(field, start) {
        if v.hi() >= 1.0 {
            return Err(IntegrateError::DomainExit { tau: 0.0, value: v.hi() });
        }
    }
    let mut traj = TrajectoryEnclosure::empty(start, direction);
    if stop(start) {
        return Ok((traj, true));
    }
    let mut elapsed = 0.0f64;
    let mut elapsed_iv = Interval::ZERO;
    let mut h_cap = cfg.h_max;
    while elapsed < tau {
        if traj.steps.len() >= cfg.max_steps {
            return Err(IntegrateError::StepLimit(cfg.max_steps));
        }
        let mut h = suggest_step(&g, &traj.set.c, cfg).min(h_cap).min(tau - elapsed);
        let scale = 1.0 + traj.set.c.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let allowed = (10.0 * cfg.tol * scale).max(WIDTH_FRACTION * traj.set.max_width());
        let out = loop {
            match lohner_step(&g, &traj.set, h, cfg.order) {
                Ok(o) if o.remainder > allowed && h > cfg.h_min => h = (0.7 * h).max(cfg.h_min),
                Ok(o) => break o,
                Err(IntegrateError::NoEnclosure { .. } | IntegrateError::TimeFactor(_)) if h > cfg.h_min => h *= 0.5,
                Err(IntegrateError::NoEnclosure { .. }) => {
                    return Err(IntegrateError::StepTooSmall { h_min: cfg.h_min, tau: elapsed })
                }
                Err(e) => return Err(e),
            }
        };
        // the horizon is invariant, so an orbit starting inside never reaches it;
        // an end box entirely beyond it means the enclosure is broken
        if let Some(v) = horizon_range(&g, &out.set.hull()) {
            if v.lo() > 1.0 {
                return Err(IntegrateError::DomainExit { tau: elapsed, value: v.lo() });
            }
        }
        // the remainder of the tube grows far faster than h^order
        let room = if out.remainder > 0.0 { (allowed / out.remainder).powf(0.5 / cfg.order as f64) } else { 2.0 };
        h_cap = (h * (0.95 * room).clamp(1.0, 2.0)).min(cfg.h_max);
        let t0 = elapsed_iv;
        elapsed_iv += Interval::point(h);
        elapsed = if h == tau - elapsed { tau } else { elapsed + h };
        traj.passing_time += out.integral;
        let end = out.set.hull();
        traj.steps.push(StepRecord { tau: t0.hull(&elapsed_iv), tube: out.tube, end: end.clone() });
        traj.set = out.set;
        traj.tau = elapsed_iv;
        if stop(&end) {
            return Ok((traj, true));
        }
    }
    Ok((traj, false))
}

pub fn integrate(
    field: &PolyField,
    start: &[Interval],
    tau: f64,
    direction: Direction,
    cfg: &IntegratorConfig,
) -> Result<TrajectoryEnclosure, IntegrateError> {
    Ok(integrate_until(field, start, tau, direction, cfg, |_| false)?.0)
}

/// Backward extension of a local stable manifold from the chart point
/// `P(theta_seed)` over `tau` units of desingularized time.
pub fn extend_manifold(
    chart: &ManifoldChart,
    theta_seed: &[f64],
    tau: f64,
    cfg: &IntegratorConfig,
) -> Result<TrajectoryEnclosure, IntegrateError> {
    let theta: Vec<Interval> = theta_seed.iter().map(|&t| Interval::point(t)).collect();
    let start = chart.eval(&theta)?;
    integrate(&chart.field, &start, tau, Direction::Backward, cfg)
}

/// Non-rigorous float flow over `τ` (negative for backward), fixed order.
pub fn float_flow(field: &PolyField, x0: &[f64], tau: f64, cfg: &IntegratorConfig) -> Vec<f64> {
    let g = if tau < 0.0 { field.negated() } else { field.clone() };
    let total = tau.abs();
    let mut x = x0.to_vec();
    let mut t = 0.0;
    while t < total {
        let h = suggest_step(&g, &x, cfg).min(total - t);
        let jet = taylor(&g, &x, cfg.order, false);
        x = jet
            .x
            .iter()
            .map(|c| c[..cfg.order].iter().rev().fold(0.0, |acc, &ck| acc * h + ck))
            .collect();
        t += h;
    }
    x
}

/// Ball `{x : |T^{-1}(x − p)|₂ < ρ}` around a hyperbolic sink or source on
/// which the symmetric part of `T^{-1} Dg T` is definite, so `|T^{-1}(x − p)|`
/// decays at rate at least `mu` forward (sink) or backward (source).
#[derive(Clone, Debug)]
pub struct LyapunovBall {
    pub center: Vec<Interval>,
    pub t: Mat<f64>,
    pub t_inv: Mat<Interval>,
    pub rho: f64,
    pub mu: f64,
    pub sink: bool,
}

impl LyapunovBall {
    /// Largest `ρ ≤ rho_max` (by halving) that passes the definiteness check.
    pub fn certify(field: &PolyField, eq: &VerifiedEquilibrium, rho_max: f64) -> Result<LyapunovBall, IntegrateError> {
        let n = field.n();
        let sink = eq.is_sink();
        if !sink && !eq.is_source() {
            return Err(IntegrateError::NoLyapunovBall("equilibrium is a saddle".into()));
        }
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for p in &eq.real_pairs {
            cols.push(p.vector.iter().map(|v| v.mid()).collect());
        }
        for c in &eq.complex_pairs {
            cols.push(c.u.iter().map(|v| v.mid()).collect());
            cols.push(c.v.iter().map(|v| v.mid()).collect());
        }
        let t: Mat<f64> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        let t_iv = linalg::to_interval(&t);
        let t_inv = linalg::inverse_interval(&t_iv)?;
        let rates: Vec<f64> = eq
            .real_pairs
            .iter()
            .map(|p| p.value.mig())
            .chain(eq.complex_pairs.iter().map(|c| c.re.mig()))
            .collect();
        let mu = 0.5 * rates.iter().cloned().fold(f64::INFINITY, f64::min);
        let ball = |rho| LyapunovBall { center: eq.location.clone(), t: t.clone(), t_inv: t_inv.clone(), rho, mu, sink };
        let mut rho = rho_max;
        for _ in 0..40 {
            if ball(rho).is_definite(field) {
                let mut fail = 2.0 * rho;
                if fail > rho_max {
                    return Ok(ball(rho));
                }
                for _ in 0..8 {
                    let mid = 0.5 * (rho + fail);
                    if ball(mid).is_definite(field) {
                        rho = mid;
                    } else {
                        fail = mid;
                    }
                }
                return Ok(ball(rho));
            }
            rho *= 0.5;
        }
        Err(IntegrateError::NoLyapunovBall(format!("definiteness fails down to radius {rho:e}")))
    }

    /// Box enclosing the ball for every center in the location enclosure.
    pub fn enclosing_box(&self) -> Vec<Interval> {
        let n = self.center.len();
        let ball: Vec<Interval> = vec![Interval::symmetric(self.rho); n];
        let off = linalg::mat_vec(&linalg::to_interval(&self.t), &ball);
        self.center.iter().zip(off).map(|(c, o)| *c + o).collect()
    }

    /// Checks `±Sym(T^{-1} Dg(B) T) − μ I` positive definite on the ball box.
    pub fn is_definite(&self, field: &PolyField) -> bool {
        let n = self.center.len();
        let bx = self.enclosing_box();
        let k = linalg::mat_mul(&linalg::mat_mul(&self.t_inv, &jacobian_enclosure(field, &bx)), &linalg::to_interval(&self.t));
        let sign = if self.sink { -1.0 } else { 1.0 };
        let sym: Mat<Interval> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let s = (k[i][j] + k[j][i]).scale(0.5 * sign);
                        if i == j {
                            s - self.mu
                        } else {
                            s
                        }
                    })
                    .collect()
            })
            .collect();
        cholesky_positive(&sym)
    }

    /// `sup |T^{-1}(x − p)|₂` over a box, for every `p` in the center enclosure.
    pub fn coordinate_radius(&self, bx: &[Interval]) -> f64 {
        let d: Vec<Interval> = bx.iter().zip(&self.center).map(|(x, c)| *x - *c).collect();
        let y = linalg::mat_vec(&self.t_inv, &d);
        y.iter().map(|v| v.sqr()).sum::<Interval>().sqrt().map_or(f64::INFINITY, |v| v.hi())
    }

    pub fn contains(&self, bx: &[Interval]) -> bool {
        self.coordinate_radius(bx) < self.rho
    }

    /// Bound of `∫_0^∞ |S − S(p)| dτ` from a box inside the ball, using
    /// `|S(x) − S(p)| ≤ G |x − p|₂`, `|x − p|₂ ≤ ‖T‖₂ |y|` and `|y(τ)| ≤ |y₀| e^{−μτ}`.
    pub fn time_tail(&self, field: &PolyField, bx: &[Interval]) -> Result<f64, IntegrateError> {
        let y0 = self.coordinate_radius(bx);
        if y0 >= self.rho {
            return Err(IntegrateError::NotEntered);
        }
        let ball = self.enclosing_box();
        let n = ball.len();
        let grad = time_factor_gradient(field, &ball)?;
        let g2 = grad.iter().map(|v| v.sqr()).sum::<Interval>().sqrt().map_or(f64::INFINITY, |v| v.hi());
        let tf: Interval = (0..n)
            .map(|i| (0..n).map(|j| Interval::point(self.t[i][j]).sqr()).sum::<Interval>())
            .sum::<Interval>()
            .sqrt()
            .map_or(Interval::point(f64::INFINITY), |v| v);
        let bound = Interval::point(g2) * tf * Interval::point(y0) / Interval::point(self.mu);
        Ok(bound.hi())
    }
}

/// `∇S` over a box (polynomial time factors only).
fn time_factor_gradient(field: &PolyField, bx: &[Interval]) -> Result<Vec<Interval>, IntegrateError> {
    match field.timefactor() {
        Some(TimeFactor::Poly(s)) => Ok((0..field.n()).map(|j| s.deriv(j).eval_interval(bx)).collect()),
        _ => Err(IntegrateError::TimeFactor("tail bound needs a polynomial time factor".into())),
    }
}

/// Interval Cholesky; true when every pivot is certified positive.
/// `Dg` over a box: the naive enclosure intersected with the mean-value form
/// `Dg(c) + Σ_k ∂_k Dg(B) (B_k − c_k)`.
fn jacobian_enclosure(field: &PolyField, bx: &[Interval]) -> Mat<Interval> {
    let n = bx.len();
    let c: Vec<Interval> = bx.iter().map(|v| Interval::point(v.mid())).collect();
    let jc = field.jacobian(&c);
    let h = field.hessian(bx);
    let naive = field.jacobian(bx);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mv = (0..n).fold(jc[i][j], |acc, k| acc + h[i][j][k] * (bx[k] - c[k]));
                    mv.intersect(&naive[i][j]).unwrap_or(mv)
                })
                .collect()
        })
        .collect()
}

fn cholesky_positive(a: &Mat<Interval>) -> bool {
    let n = a.len();
    let mut l = vec![vec![Interval::ZERO; n]; n];
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k].sqr();
        }
        if !d.is_positive() {
            return false;
        }
        let Ok(dj) = d.sqrt() else { return false };
        l[j][j] = dj;
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / dj;
        }
    }
    true
}

/// Whether a backward trajectory enters the certified repulsion ball of a
/// source; `Err(NotEntered)` when inconclusive.
pub fn connect_to_source(
    traj: &TrajectoryEnclosure,
    field: &PolyField,
    source: &VerifiedEquilibrium,
    basin_radius: f64,
) -> Result<bool, IntegrateError> {
    if !source.is_source() {
        return Err(IntegrateError::NoLyapunovBall("equilibrium is not a source".into()));
    }
    let ball = LyapunovBall::certify(field, source, basin_radius)?;
    if ball.contains(&traj.start) || traj.steps.iter().any(|s| ball.contains(&s.end)) {
        Ok(true)
    } else {
        Err(IntegrateError::NotEntered)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_example1, build_example3, verify_equilibrium};
    use crate::poly::Poly;

    fn decay() -> PolyField {
        PolyField::new("decay", vec![Poly::parse(1, "-x1").unwrap()], None, None).unwrap()
    }

    #[test]
    fn constant_state_is_fixed() {
        let g = PolyField::new("zero", vec![Poly::zero(2), Poly::zero(2)], None, None).unwrap();
        let b = vec![Interval::from_bounds(0.5, 0.75), Interval::point(-1.0)];
        let (b1, tube) = rigorous_step(&g, &b, 0.3, 10).unwrap();
        for i in 0..2 {
            assert!(b[i].subset_of(&b1[i]) && b1[i].width() <= b[i].width() * (1.0 + 1e-12) + 1e-15);
            assert!(b[i].subset_of(&tube[i]));
        }
    }

    #[test]
    fn exponential_decay_step() {
        let (b1, _) = rigorous_step(&decay(), &[Interval::ONE], 0.1, 10).unwrap();
        let exact = (-0.1f64).exp();
        assert!(b1[0].contains(exact), "{}", b1[0]);
        assert!(b1[0].width() < 1e-12);
    }

    #[test]
    fn long_decay_tracks_exponential() {
        let cfg = IntegratorConfig::default();
        let tr = integrate(&decay(), &[Interval::ONE], 5.0, Direction::Forward, &cfg).unwrap();
        let end = tr.end_box();
        assert!(end[0].contains((-5.0f64).exp()), "{}", end[0]);
        assert!(end[0].width() < 1e-13);
        assert!(tr.tau.contains(5.0));
        let back = integrate(&decay(), &end, 5.0, Direction::Backward, &cfg).unwrap();
        assert!(back.end_box()[0].contains(1.0));
    }

    #[test]
    fn passing_time_of_constant_factor() {
        // ẋ = -x with S = x: ∫ e^{-τ} dτ over [0, 2] = 1 − e^{-2}
        let x = Poly::parse(1, "x1").unwrap();
        let g = PolyField::new("d", vec![x.neg()], None, Some(TimeFactor::Poly(x))).unwrap();
        let tr = integrate(&g, &[Interval::ONE], 2.0, Direction::Forward, &IntegratorConfig::default()).unwrap();
        let want = 1.0 - (-2.0f64).exp();
        assert!(tr.passing_time.contains(want) && tr.passing_time.width() < 1e-13, "{}", tr.passing_time);
    }

    #[test]
    fn zero_backward_time_has_zero_passing() {
        let g = build_example1();
        let tr = integrate(&g, &[Interval::point(1.99), Interval::point(0.06)], 0.0, Direction::Backward, &Default::default())
            .unwrap();
        assert_eq!(tr.passing_time, Interval::ZERO);
        assert!(tr.steps.is_empty());
    }

    #[test]
    fn tube_contains_float_orbit() {
        let g = build_example3();
        let x0 = [-0.70, 0.52];
        let cfg = IntegratorConfig::default();
        let b: Vec<Interval> = x0.iter().map(|&v| Interval::point(v)).collect();
        let tr = integrate(&g, &b, 3.0, Direction::Forward, &cfg).unwrap();
        for s in tr.steps.iter().step_by(3) {
            let tau = s.tau.hi();
            let x = float_flow(&g, &x0, tau, &cfg);
            for i in 0..2 {
                assert!(s.end[i].inflate(1e-12).contains(x[i]));
            }
        }
        let d = float_flow(&g, &x0, 3.0, &cfg);
        assert!(d[0].powi(4) + d[1].powi(2) < 1.0);
    }

    #[test]
    fn runs_are_deterministic() {
        let g = build_example1();
        let b = [Interval::point(1.99), Interval::point(0.06)];
        let cfg = IntegratorConfig::default();
        let a = integrate(&g, &b, 1.0, Direction::Backward, &cfg).unwrap();
        let c = integrate(&g, &b, 1.0, Direction::Backward, &cfg).unwrap();
        assert_eq!(a.end_box(), c.end_box());
        assert_eq!(a.passing_time, c.passing_time);
    }

    #[test]
    fn sink_ball_and_tail() {
        let g = build_example3();
        let eq = verify_equilibrium(&g, &[0.9891369958949775, 0.2067585570051806], 1e-10).unwrap();
        assert!(eq.is_sink());
        let ball = LyapunovBall::certify(&g, &eq, 0.2).unwrap();
        assert!(ball.contains(&eq.location));
        let tail = ball.time_tail(&g, &eq.location).unwrap();
        assert!(tail < 1e-12);
        let saddle = verify_equilibrium(&g, &[0.0, 0.0], 1e-10).unwrap();
        assert!(LyapunovBall::certify(&g, &saddle, 0.1).is_err());
    }

    #[test]
    fn source_start_inside_ball_connects() {
        let g = build_example3();
        let src = verify_equilibrium(&g, &[0.7328506362011802, 0.5370700549804746], 1e-10).unwrap();
        let tr = integrate(&g, &src.location, 0.0, Direction::Backward, &Default::default()).unwrap();
        assert_eq!(connect_to_source(&tr, &g, &src, 0.1), Ok(true));
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let tr = integrate(&decay(), &[Interval::ONE], 1.0, Direction::Forward, &Default::default()).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("tau_lo,tau_hi,x1_lo,x1_hi"));
        assert_eq!(text.lines().count(), tr.steps.len() + 1);
    }
}
