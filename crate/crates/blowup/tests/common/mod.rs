#![allow(dead_code)]

pub mod props;

use blowup::drivers::{chart_at, ChartParams, Model, SADDLE_SIGMA, TABLE_N, TABLE_SIGMA};
use blowup::field::PolyField;
use blowup::interval::Interval;
use blowup::manifold::ManifoldChart;

pub struct ChartCase {
    pub model: &'static str,
    pub point: &'static str,
    pub n_trunc: usize,
    pub sigma: Option<f64>,
    pub r0_bound: f64,
}

/// Every chart whose certification is part of the acceptance run.
pub fn certified_cases() -> Vec<ChartCase> {
    let c = |model, point, n_trunc, sigma, r0_bound| ChartCase { model, point, n_trunc, sigma, r0_bound };
    vec![
        c("example1", "p2", TABLE_N, Some(TABLE_SIGMA), 1e-10),
        c("example1", "p2", 100, None, 1e-6),
        c("example2", "p1", 50, None, 1e-7),
        c("example2", "p2", 60, None, 1e-8),
        c("example2", "p0", 160, None, 1e-11),
        c("example3", "p0", 100, None, 1e-12),
        c("example3", "pinf_s_plus", 100, None, 1e-8),
        c("example3", "pinf_s_plus", 100, Some(SADDLE_SIGMA), 1e-8),
    ]
}

pub fn build(case: &ChartCase) -> ManifoldChart {
    let model = Model::load(case.model).expect("bundled model");
    let params = ChartParams { n_trunc: case.n_trunc, sigma: case.sigma, ..Default::default() };
    chart_at(&model, case.point, &params).expect("chart certifies")
}

pub fn chart(model: &str, point: &str, n_trunc: usize, sigma: Option<f64>) -> ManifoldChart {
    let model = Model::load(model).expect("bundled model");
    chart_at(&model, point, &ChartParams { n_trunc, sigma, ..Default::default() }).expect("chart certifies")
}

pub fn time_factor(field: &PolyField, x: &[f64]) -> f64 {
    let b: Vec<Interval> = x.iter().map(|&v| Interval::point(v)).collect();
    field.time_factor(&b).expect("time factor").mid()
}

/// Adaptive Simpson rule on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// `∫₀^∞ S(P(e^{Λτ}θ)) dτ` by quadrature along the linearized chart flow.
pub fn chart_flow_quadrature(chart: &ManifoldChart, theta: &[f64]) -> f64 {
    let lam: Vec<f64> = chart.lambda().iter().map(|l| l.mid()).collect();
    let slow = lam.iter().map(|l| l.abs()).fold(f64::INFINITY, f64::min);
    let horizon = 40.0 / slow;
    let f = |tau: f64| {
        let th: Vec<f64> = theta.iter().zip(&lam).map(|(t, l)| t * (l * tau).exp()).collect();
        time_factor(&chart.field, &chart.eval_f64(&th))
    };
    let pieces = 64;
    (0..pieces)
        .map(|k| {
            let a = horizon * k as f64 / pieces as f64;
            simpson(&f, a, a + horizon / pieces as f64, 1e-13)
        })
        .sum()
}

/// Classical RK4 for `x' = g(x)`, `t' = S(x)`; returns the end point and `∫S`.
pub fn rk4_orbit(field: &PolyField, x0: &[f64], tau: f64, h: f64) -> (Vec<f64>, f64) {
    let n = x0.len();
    let rhs = |y: &[f64]| -> Vec<f64> {
        let mut d = field.eval(&y[..n]);
        d.push(time_factor(field, &y[..n]));
        d
    };
    let mut y: Vec<f64> = x0.to_vec();
    y.push(0.0);
    let steps = (tau / h).ceil() as usize;
    let h = tau / steps as f64;
    for _ in 0..steps {
        let k1 = rhs(&y);
        let y2: Vec<f64> = y.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
        let k2 = rhs(&y2);
        let y3: Vec<f64> = y.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
        let k3 = rhs(&y3);
        let y4: Vec<f64> = y.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
        let k4 = rhs(&y4);
        for i in 0..=n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    let t = y.pop().unwrap();
    (y, t)
}

/// `θ` on a 101-point grid in `[-0.5, 0.5]^m`, or a 101×101 tensor grid for `m = 2`.
pub fn residual_grid(m: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..101).map(|k| -0.5 + k as f64 / 100.0).collect();
    match m {
        1 => axis.iter().map(|&t| vec![t]).collect(),
        2 => axis.iter().flat_map(|&a| axis.iter().map(move |&b| vec![a, b])).collect(),
        _ => axis.iter().map(|&t| vec![t; m]).collect(),
    }
}

pub fn max_conjugacy_residual(chart: &ManifoldChart) -> f64 {
    residual_grid(chart.m()).iter().map(|t| chart.conjugacy_residual(t)).fold(0.0, f64::max)
}

fn sample<T: std::fmt::Debug>(strategy: impl proptest::strategy::Strategy<Value = T>, count: usize) -> Vec<T> {
    use proptest::strategy::ValueTree;
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    (0..count).map(|_| strategy.new_tree(&mut runner).unwrap().current()).collect()
}

/// Points on the unit sphere in `R^3`.
pub fn sphere_points(count: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut extra = 0;
    while out.len() < count {
        for d in sample(proptest::collection::vec(-1.0f64..1.0, 3), count + extra) {
            let r = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r > 1e-3 && out.len() < count {
                out.push(d.iter().map(|v| v / r).collect());
            }
        }
        extra += 1;
    }
    out
}

/// Points on `x1⁴ + x2² = 1`.
pub fn parabolic_horizon_points(count: usize) -> Vec<Vec<f64>> {
    sample(0.0f64..std::f64::consts::TAU, count)
        .into_iter()
        .map(|phi| {
            let (c, s) = (phi.cos(), phi.sin());
            vec![c.signum() * c.abs().sqrt(), s]
        })
        .collect()
}

/// Points on the horizon `s = 0` of a directional chart.
pub fn directional_horizon_points(count: usize) -> Vec<Vec<f64>> {
    sample(-5.0f64..5.0, count).into_iter().map(|x| vec![x, 0.0]).collect()
}

/// Largest `|∇h · g|` over the points.
pub fn horizon_invariance_defect(field: &PolyField, points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .map(|x| {
            let b: Vec<Interval> = x.iter().map(|&v| Interval::point(v)).collect();
            blowup::field::radial_derivative(field, &b).expect("compactified").mag()
        })
        .fold(0.0, f64::max)
}

/// Smallest `q` with `|t(θ_k)| ≤ |θ_k|^q` along `θ_k = 2^{-k} d`, using upper bounds of `|t|`.
pub fn decay_exponent(s: &blowup::blowtime::TmaxSeries, dir: &[f64]) -> f64 {
    (1..=40)
        .map(|k| {
            let h = 2f64.powi(-k);
            let th: Vec<f64> = dir.iter().map(|d| d * h).collect();
            let size = th.iter().map(|t| t.abs()).fold(0.0, f64::max);
            s.eval_point(&th).unwrap().mag().ln() / size.ln()
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn decay_directions(m: usize) -> Vec<Vec<f64>> {
    if m == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-0.7, 0.7], vec![1.0, 1.0]]
    }
}

/// Probe parameters with `|θ|_∞ ≤ 0.9`.
pub fn probe_points(m: usize) -> Vec<Vec<f64>> {
    if m == 1 {
        [-0.9, -0.6, -0.3, -0.05, 0.05, 0.3, 0.6, 0.9].iter().map(|&t| vec![t]).collect()
    } else {
        vec![vec![0.0, 0.9], vec![0.0, -0.9], vec![0.9, 0.0], vec![0.3, 0.6], vec![-0.6, -0.6], vec![0.6, -0.3]]
    }
}
