//! End-to-end runs on the bundled examples: charts, the blow-up time table,
//! the `t_max` surface, the separatrix scan and heteroclinic connections.

use std::io;

use serde::Serialize;
use thiserror::Error;

use crate::blowtime::{self, BlowtimeError, TmaxSeries};
use crate::compactify::horizon_p;
use crate::field::{verify_equilibrium, FieldError, PolyField, VerifiedEquilibrium};
use crate::integrate::{
    float_flow, integrate, integrate_until, Direction, IntegrateError, IntegratorConfig, LyapunovBall,
};
use crate::interval::Interval;
use crate::manifold::{build_chart, ManifoldChart, ManifoldError};
use crate::par;

#[derive(Error, Debug)]
pub enum DriverError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Blowtime(#[from] BlowtimeError),
    #[error("model has no point named {0:?}")]
    UnknownPoint(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("output: {0}")]
    Output(String),
}

impl From<csv::Error> for DriverError {
    fn from(e: csv::Error) -> Self {
        DriverError::Output(e.to_string())
    }
}

impl From<io::Error> for DriverError {
    fn from(e: io::Error) -> Self {
        DriverError::Output(e.to_string())
    }
}

const EXAMPLE1: &str = include_str!("../models/example1.model");
const EXAMPLE2: &str = include_str!("../models/example2.model");
const EXAMPLE3: &str = include_str!("../models/example3.model");

/// Radius of the box handed to the equilibrium verifier.
const EQ_BOX: f64 = 1e-12;

/// Text of a bundled model.
pub fn builtin_model_text(name: &str) -> Option<&'static str> {
    match name {
        "example1" => Some(EXAMPLE1),
        "example2" => Some(EXAMPLE2),
        "example3" => Some(EXAMPLE3),
        _ => None,
    }
}

/// A vector field together with named equilibrium guesses (`point.NAME = x1 x2 ...`).
#[derive(Clone, Debug)]
pub struct Model {
    pub field: PolyField,
    pub points: Vec<(String, Vec<f64>)>,
}

impl Model {
    /// Builtin name (`example1`, `example2`, `example3`) or path to a model file.
    pub fn load(spec: &str) -> Result<Model, DriverError> {
        let text = match builtin_model_text(spec) {
            Some(t) => t.to_string(),
            None => std::fs::read_to_string(spec).map_err(|e| FieldError::Model(format!("{spec}: {e}")))?,
        };
        Model::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Model, DriverError> {
        let field = PolyField::from_model_str(text)?;
        let points = parse_points(text, field.n())?;
        Ok(Model { field, points })
    }

    pub fn guess(&self, name: &str) -> Result<&[f64], DriverError> {
        self.points
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, p)| p.as_slice())
            .ok_or_else(|| DriverError::UnknownPoint(name.to_string()))
    }

    pub fn equilibrium(&self, name: &str) -> Result<VerifiedEquilibrium, DriverError> {
        Ok(verify_equilibrium(&self.field, self.guess(name)?, EQ_BOX)?)
    }
}

fn parse_points(text: &str, n: usize) -> Result<Vec<(String, Vec<f64>)>, DriverError> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap().trim();
        let Some((k, v)) = line.split_once('=') else { continue };
        let Some(name) = k.trim().strip_prefix("point.") else { continue };
        let coords: Vec<f64> = v
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| DriverError::Config(format!("bad coordinate {t:?} for point {name}"))))
            .collect::<Result<_, _>>()?;
        if coords.len() != n {
            return Err(DriverError::Config(format!("point {name} has {} coordinates, expected {n}", coords.len())));
        }
        out.push((name.to_string(), coords));
    }
    Ok(out)
}

/// Parameters shared by the chart-building commands.
#[derive(Clone, Debug)]
pub struct ChartParams {
    pub n_trunc: usize,
    pub sigma: Option<f64>,
    pub r_star: f64,
}

impl Default for ChartParams {
    fn default() -> Self {
        ChartParams { n_trunc: 100, sigma: None, r_star: 1e-6 }
    }
}

pub fn chart_at(model: &Model, point: &str, p: &ChartParams) -> Result<ManifoldChart, DriverError> {
    let eq = model.equilibrium(point)?;
    Ok(build_chart(&model.field, &eq, p.sigma, p.n_trunc, p.r_star)?)
}

/// Named points whose equilibria carry a nontrivial real stable manifold.
pub fn chartable_points(model: &Model) -> Vec<String> {
    model
        .points
        .iter()
        .filter(|(_, g)| {
            verify_equilibrium(&model.field, g, EQ_BOX).map(|eq| !eq.stable_pairs().is_empty()).unwrap_or(true)
        })
        .map(|(n, _)| n.clone())
        .collect()
}

/// Chart parameter `θ ∈ {−1, 1}` whose image lies inside the domain of the
/// compactification, preferring `−1`.
pub fn interior_end(chart: &ManifoldChart) -> Result<f64, DriverError> {
    let spec = chart.field.spec().ok_or_else(|| DriverError::Config("model has no compactification".into()))?;
    for th in [-1.0, 1.0] {
        let p = chart.eval(&[Interval::point(th)])?;
        let inside = match spec.kind {
            crate::compactify::Kind::Directional { index, .. } => p[index].is_positive(),
            _ => horizon_p(&p, spec).hi() < 1.0,
        };
        if inside {
            return Ok(th);
        }
    }
    Err(DriverError::Config("neither end of the chart lies inside the domain".into()))
}

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

// ---------------------------------------------------------------- table

/// Printed enclosure: common digits, then the differing lower and upper tails.
fn printed(common: &str, lo: &str, hi: &str) -> Interval {
    let lo: f64 = format!("{common}{lo}").parse().expect("fixture");
    let hi: f64 = format!("{common}{hi}").parse().expect("fixture");
    Interval::from_bounds(lo, hi).inflate(f64::EPSILON * hi.abs())
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub label: &'static str,
    pub x: [Interval; 2],
    pub t: Interval,
}

/// Reference enclosures for the five points on the extended manifold.
pub fn table_fixtures() -> Vec<Fixture> {
    vec![
        Fixture {
            label: "P1",
            x: [printed("1.99704842870", "221", "362"), printed("0.06209042154", "03", "164")],
            t: printed("0.01945344745", "624", "758"),
        },
        Fixture {
            label: "P2",
            x: [printed("1.971379977171", "031", "454"), printed("0.22265490227", "37387", "46532")],
            t: printed("0.1821531459", "776968", "806739"),
        },
        Fixture {
            label: "P3",
            x: [printed("1.895702934910", "105", "671"), printed("0.24142735005", "28752", "30887")],
            t: printed("1.00170345745", "2293", "7477"),
        },
        Fixture {
            label: "P4",
            x: [printed("1.89771158641", "7872", "819"), printed("0.250316449049", "6631", "8725")],
            t: printed("1.78231786657", "067", "7252"),
        },
        Fixture {
            label: "P5",
            x: [printed("1.899856004192", "361", "656"), printed("0.25017265254", "49681", "51455")],
            t: printed("2.6651422937", "42664", "50833"),
        },
    ]
}

/// Truncation and eigenvector scaling of the chart behind the table.
pub const TABLE_N: usize = 300;
pub const TABLE_SIGMA: f64 = -0.09999;

#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub label: String,
    /// Backward desingularized time from the chart boundary.
    pub eta: f64,
    pub x: Vec<Interval>,
    pub local: Interval,
    pub passing: Interval,
    pub total: Interval,
    pub reference_t: Interval,
    pub point_matches: bool,
    pub pass: bool,
}

/// Backward times at which the float orbit from `x0` passes closest to each target.
pub fn closest_approach_times(
    field: &PolyField,
    x0: &[f64],
    targets: &[Vec<f64>],
    eta_max: f64,
    cfg: &IntegratorConfig,
) -> Vec<f64> {
    let dist2 = |x: &[f64], p: &[f64]| x.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let h = 0.01;
    let mut best: Vec<(f64, f64)> = targets.iter().map(|p| (dist2(x0, p), 0.0)).collect();
    let mut x = x0.to_vec();
    let steps = (eta_max / h).ceil() as usize;
    for k in 1..=steps {
        x = float_flow(field, &x, -h, cfg);
        for (b, p) in best.iter_mut().zip(targets) {
            let d = dist2(&x, p);
            if d < b.0 {
                *b = (d, k as f64 * h);
            }
        }
    }
    best.iter()
        .zip(targets)
        .map(|(&(_, eta0), p)| {
            // Newton on ⟨x(−η) − p, g(x(−η))⟩ = 0
            let mut eta = eta0;
            for _ in 0..10 {
                if eta <= 0.0 {
                    return 0.0;
                }
                let y = float_flow(field, x0, -eta, cfg);
                let v = field.eval(&y);
                let f: f64 = y.iter().zip(p).zip(&v).map(|((a, b), g)| (a - b) * g).sum();
                let df: f64 = -v.iter().map(|g| g * g).sum::<f64>();
                let step = f / df;
                eta -= step;
                if step.abs() < 1e-15 * eta.max(1.0) {
                    break;
                }
            }
            eta.max(0.0)
        })
        .collect()
}

/// Reproduces the blow-up time table from the certified chart at the
/// directional horizon equilibrium of the first example.
pub fn blowup_table(chart: &ManifoldChart, cfg: &IntegratorConfig) -> Result<Vec<TableRow>, DriverError> {
    let theta = -1.0;
    let (series, _) = blowtime::rational_series_example1(chart)?;
    let local = series.eval_point(&[theta])?;
    let start = chart.eval(&[Interval::point(theta)])?;
    let x0: Vec<f64> = start.iter().map(|v| v.mid()).collect();
    let fixtures = table_fixtures();
    let targets: Vec<Vec<f64>> = fixtures.iter().map(|f| f.x.iter().map(|v| v.mid()).collect()).collect();
    let etas = closest_approach_times(&chart.field, &x0, &targets, 45.0, cfg);
    let jobs: Vec<(usize, f64)> = etas.into_iter().enumerate().collect();
    let runs = par::map(&jobs, |&(i, eta)| -> Result<TableRow, DriverError> {
        let traj = integrate(&chart.field, &start, eta, Direction::Backward, cfg)?;
        let x = traj.end_box();
        let res = blowtime::total_blowup_time(local, &[theta], Some(&traj));
        let f = &fixtures[i];
        let point_matches = x.iter().zip(&f.x).all(|(a, b)| a.intersects(b));
        Ok(TableRow {
            label: f.label.to_string(),
            eta,
            x,
            local,
            passing: res.passing,
            total: res.total,
            reference_t: f.t,
            point_matches,
            pass: res.total.intersects(&f.t),
        })
    });
    runs.into_iter().collect()
}

pub fn write_table_csv<W: io::Write>(rows: &[TableRow], w: W) -> Result<(), DriverError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "label", "eta", "x1_lo", "x1_hi", "x2_lo", "x2_hi", "local_lo", "local_hi", "passing_lo", "passing_hi", "t_lo",
        "t_hi", "t_width", "ref_t_lo", "ref_t_hi", "point_match", "pass",
    ])?;
    for r in rows {
        out.write_record([
            r.label.clone(),
            fmt(r.eta),
            fmt(r.x[0].lo()),
            fmt(r.x[0].hi()),
            fmt(r.x[1].lo()),
            fmt(r.x[1].hi()),
            fmt(r.local.lo()),
            fmt(r.local.hi()),
            fmt(r.passing.lo()),
            fmt(r.passing.hi()),
            fmt(r.total.lo()),
            fmt(r.total.hi()),
            fmt(r.total.width()),
            fmt(r.reference_t.lo()),
            fmt(r.reference_t.hi()),
            r.point_matches.to_string(),
            if r.pass { "PASS" } else { "FAIL" }.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- surface

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum CellStatus {
    Valid,
    /// `|P(θ)|² < 1` could not be certified.
    Invalid,
    Failed(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct SurfaceCell {
    pub theta: [f64; 2],
    pub t: Option<Interval>,
    pub status: CellStatus,
}

/// `t_max` on a `grid × grid` lattice of the closed unit square of a
/// two-dimensional Poincaré chart.
pub fn tmax_surface(chart: &ManifoldChart, grid: usize) -> Result<(TmaxSeries, Vec<SurfaceCell>), DriverError> {
    if chart.m() != 2 || grid < 2 {
        return Err(DriverError::Config(format!("surface needs m = 2 and grid ≥ 2 (m = {}, grid = {grid})", chart.m())));
    }
    let series = blowtime::poincare_series(chart)?;
    let step = 2.0 / (grid - 1) as f64;
    let axis: Vec<f64> = (0..grid).map(|i| if 2 * i + 1 == grid { 0.0 } else { -1.0 + step * i as f64 }).collect();
    let thetas: Vec<[f64; 2]> = axis.iter().flat_map(|&a| axis.iter().map(move |&b| [a, b])).collect();
    let cells = par::map(&thetas, |th| match blowtime::tmax_poincare_with(&series, chart, th) {
        Ok(t) => SurfaceCell { theta: *th, t: Some(t), status: CellStatus::Valid },
        Err(BlowtimeError::Validity(_)) => SurfaceCell { theta: *th, t: None, status: CellStatus::Invalid },
        Err(e) => SurfaceCell { theta: *th, t: None, status: CellStatus::Failed(e.to_string()) },
    });
    Ok((series, cells))
}

pub fn write_surface_csv<W: io::Write>(cells: &[SurfaceCell], w: W) -> Result<(), DriverError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["theta1", "theta2", "t_lo", "t_hi", "status"])?;
    for c in cells {
        let (lo, hi) = c.t.map_or((String::new(), String::new()), |t| (fmt(t.lo()), fmt(t.hi())));
        let status = match &c.status {
            CellStatus::Valid => "valid".to_string(),
            CellStatus::Invalid => "invalid".to_string(),
            CellStatus::Failed(e) => format!("failed: {e}"),
        };
        out.write_record([fmt(c.theta[0]), fmt(c.theta[1]), lo, hi, status])?;
    }
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- scan

/// Eigenvector scaling of the horizon saddle chart in the scan.
pub const SADDLE_SIGMA: f64 = 0.045;

#[derive(Clone, Debug)]
pub struct ScanConfig {
    /// Total number of points, split evenly between the two sides.
    pub points: usize,
    pub half_length: f64,
    pub min_distance: f64,
    /// Points closer than this to the separatrix are not attempted.
    pub floor: f64,
    pub chart: ChartParams,
    /// Integration stops once the remaining time is bounded by this.
    pub tail_target: f64,
    pub tau_max: f64,
    pub integrator: IntegratorConfig,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            points: 200,
            half_length: 0.05,
            min_distance: 1e-10,
            floor: 1e-13,
            chart: ChartParams { sigma: Some(SADDLE_SIGMA), ..ChartParams::default() },
            tail_target: 1e-6,
            tau_max: 400.0,
            integrator: IntegratorConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Outcome {
    /// Converges to the horizon sink; finite blow-up time.
    BlowUp,
    /// Converges to the bounded sink; the solution is global.
    Global,
    Inconclusive(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanPoint {
    pub side: Side,
    pub distance: f64,
    pub point: Vec<f64>,
    pub t: Option<Interval>,
    pub tau: f64,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    /// Chart boundary point on the separatrix.
    pub p0s: Vec<Interval>,
    pub theta_end: f64,
    pub tangent: Vec<f64>,
    /// Unit normal pointing into the right-hand side.
    pub normal: Vec<f64>,
    pub t_p0s: Interval,
    pub points: Vec<ScanPoint>,
}

/// Chart point names used by the scan and the connections of the third example.
pub mod ex3 {
    pub const SADDLE_HORIZON: &str = "pinf_s_plus";
    pub const HORIZON_SINK: &str = "pinf_plus";
    pub const BOUNDED_SINK: &str = "pb_minus";
    pub const BOUNDED_SOURCE: &str = "pb_plus";
    pub const ORIGIN: &str = "p0";
}

/// Log-spaced distances in `[min, max]`, decreasing.
fn distances(count: usize, min: f64, max: f64) -> Vec<f64> {
    if count == 1 {
        return vec![max];
    }
    let (a, b) = (max.ln(), min.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

/// Forward integration of one point until it is captured by a certified
/// attracting ball.
fn classify_point(
    field: &PolyField,
    x0: &[f64],
    horizon_sink: &LyapunovBall,
    bounded_sink: &LyapunovBall,
    cfg: &ScanConfig,
) -> (Outcome, Option<Interval>, f64) {
    let start: Vec<Interval> = x0.iter().map(|&v| Interval::point(v)).collect();
    let mut tail = None;
    let mut global = false;
    let run = integrate_until(field, &start, cfg.tau_max, Direction::Forward, &cfg.integrator, |bx| {
        if bounded_sink.contains(bx) {
            global = true;
            return true;
        }
        if horizon_sink.contains(bx) {
            if let Ok(t) = horizon_sink.time_tail(field, bx) {
                if t <= cfg.tail_target {
                    tail = Some(t);
                    return true;
                }
            }
        }
        false
    });
    match run {
        Ok((traj, true)) => {
            let tau = traj.tau.hi();
            if global {
                (Outcome::Global, None, tau)
            } else {
                let t = traj.passing_time + Interval::symmetric(tail.unwrap_or(f64::INFINITY));
                (Outcome::BlowUp, Some(t), tau)
            }
        }
        Ok((traj, false)) => (Outcome::Inconclusive(format!("not captured by τ = {}", cfg.tau_max)), None, traj.tau.hi()),
        Err(e) => (Outcome::Inconclusive(e.to_string()), None, 0.0),
    }
}

/// Scans a segment through the chart boundary point of the stable manifold
/// of the horizon saddle, orthogonal to the manifold there.
pub fn separatrix_scan(model: &Model, cfg: &ScanConfig) -> Result<ScanReport, DriverError> {
    if cfg.points < 2 || !(cfg.min_distance > 0.0 && cfg.min_distance < cfg.half_length) {
        return Err(DriverError::Config("scan needs ≥ 2 points and 0 < min distance < half length".into()));
    }
    let chart = chart_at(model, ex3::SADDLE_HORIZON, &cfg.chart)?;
    let theta_end = interior_end(&chart)?;
    let t_p0s = blowtime::tmax_series(&chart)?.eval_point(&[theta_end])?;
    let p0s = chart.eval(&[Interval::point(theta_end)])?;
    let center: Vec<f64> = p0s.iter().map(|v| v.mid()).collect();
    let d = chart.partial_f64(&[theta_end], 0);
    let len = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tangent: Vec<f64> = d.iter().map(|v| v / len).collect();
    let mut normal = vec![-tangent[1], tangent[0]];
    if normal[0] < 0.0 {
        normal = normal.iter().map(|v| -v).collect();
    }
    let sink = model.equilibrium(ex3::HORIZON_SINK)?;
    if !sink.on_horizon {
        return Err(DriverError::Config("horizon sink is not certified on the horizon".into()));
    }
    let horizon_ball = LyapunovBall::certify(&model.field, &sink, 1.0)?;
    let bounded_ball = LyapunovBall::certify(&model.field, &model.equilibrium(ex3::BOUNDED_SINK)?, 1.0)?;
    let per_side = cfg.points / 2;
    let mut jobs: Vec<(Side, f64)> = Vec::with_capacity(2 * per_side);
    for side in [Side::Right, Side::Left] {
        for dist in distances(per_side, cfg.min_distance, cfg.half_length) {
            jobs.push((side, dist));
        }
    }
    let points = par::map(&jobs, |&(side, dist)| {
        let sign = if side == Side::Right { 1.0 } else { -1.0 };
        let x0: Vec<f64> = center.iter().zip(&normal).map(|(c, n)| c + sign * dist * n).collect();
        let (outcome, t, tau) = if dist < cfg.floor {
            (Outcome::Inconclusive(format!("distance below the scan floor {:e}", cfg.floor)), None, 0.0)
        } else {
            classify_point(&model.field, &x0, &horizon_ball, &bounded_ball, cfg)
        };
        ScanPoint { side, distance: dist, point: x0, t, tau, outcome }
    });
    Ok(ScanReport { p0s, theta_end, tangent, normal, t_p0s, points })
}

impl ScanReport {
    /// Whether the right-side midpoints increase as the distance shrinks.
    pub fn right_side_monotone(&self) -> bool {
        let mut v: Vec<(f64, f64)> =
            self.points.iter().filter(|p| p.side == Side::Right).filter_map(|p| p.t.map(|t| (p.distance, t.mid()))).collect();
        v.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        v.windows(2).all(|w| w[1].1 > w[0].1)
    }
}

pub fn write_scan_csv<W: io::Write>(report: &ScanReport, w: W) -> Result<(), DriverError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["side", "distance", "x1", "x2", "t_lo", "t_hi", "error", "tau", "outcome"])?;
    for p in &report.points {
        let (lo, hi, err) = p.t.map_or((String::new(), String::new(), String::new()), |t| {
            (fmt(t.lo()), fmt(t.hi()), fmt(t.width()))
        });
        let outcome = match &p.outcome {
            Outcome::BlowUp => "blowup".to_string(),
            Outcome::Global => "global".to_string(),
            Outcome::Inconclusive(e) => format!("inconclusive: {e}"),
        };
        let side = if p.side == Side::Right { "right" } else { "left" };
        out.write_record([
            side.to_string(),
            fmt(p.distance),
            fmt(p.point[0]),
            fmt(p.point[1]),
            lo,
            hi,
            err,
            fmt(p.tau),
            outcome,
        ])?;
    }
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- connections

#[derive(Clone, Debug, Serialize)]
pub struct ConnectionCertificate {
    pub from: String,
    pub to: String,
    pub theta: f64,
    pub tau: Interval,
    pub steps: usize,
    pub entry: Vec<Interval>,
}

/// Backward integration from `P(θ)` into the certified repelling ball of a source.
pub fn certify_connection(
    chart: &ManifoldChart,
    theta: f64,
    source: &VerifiedEquilibrium,
    tau_max: f64,
    cfg: &IntegratorConfig,
) -> Result<(Interval, usize, Vec<Interval>), DriverError> {
    let ball = LyapunovBall::certify(&chart.field, source, 0.1)?;
    let start = chart.eval(&[Interval::point(theta)])?;
    let (traj, entered) = integrate_until(&chart.field, &start, tau_max, Direction::Backward, cfg, |bx| ball.contains(bx))?;
    if !entered {
        return Err(IntegrateError::NotEntered.into());
    }
    Ok((traj.tau, traj.steps.len(), traj.end_box()))
}

/// The connections horizon saddle ← bounded source → origin of the third example.
pub fn example3_connections(
    model: &Model,
    params: &ChartParams,
    cfg: &IntegratorConfig,
) -> Vec<Result<ConnectionCertificate, DriverError>> {
    let source = match model.equilibrium(ex3::BOUNDED_SOURCE) {
        Ok(s) => s,
        Err(e) => return vec![Err(e)],
    };
    let targets = [ex3::SADDLE_HORIZON, ex3::ORIGIN];
    par::map(&targets, |&target| {
        let chart = chart_at(model, target, params)?;
        let mut last = None;
        for theta in [-1.0, 1.0] {
            match certify_connection(&chart, theta, &source, 100.0, cfg) {
                Ok((tau, steps, entry)) => {
                    return Ok(ConnectionCertificate {
                        from: ex3::BOUNDED_SOURCE.to_string(),
                        to: target.to_string(),
                        theta,
                        tau,
                        steps,
                        entry,
                    })
                }
                Err(e) => last = Some(e),
            }
        }
        Err(last.expect("two attempts"))
    })
}
