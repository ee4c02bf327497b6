mod common;

use blowup::blowtime::tmax_series;
use blowup::drivers::{SADDLE_SIGMA, TABLE_N, TABLE_SIGMA};
use blowup::manifold::ManifoldChart;

fn examples() -> Vec<(&'static str, ManifoldChart)> {
    vec![
        ("example1", common::chart("example1", "p2", 100, None)),
        ("example2", common::chart("example2", "p2", 60, None)),
        ("example3", common::chart("example3", "pinf_s_plus", 100, Some(SADDLE_SIGMA))),
    ]
}

#[test]
fn series_matches_quadrature_along_the_chart_flow() {
    for (name, chart) in examples() {
        let s = tmax_series(&chart).unwrap();
        for th in common::probe_points(chart.m()) {
            let q = common::chart_flow_quadrature(&chart, &th);
            let v = s.eval_point(&th).unwrap();
            assert!((s.eval_f64(&th) - q).abs() <= 1e-6, "{name} {th:?}: {} vs {q}", s.eval_f64(&th));
            assert!(v.inflate(1e-6).contains(q), "{name} {th:?}: {v} vs {q}");
        }
    }
}

#[test]
fn series_matches_integration_along_an_orbit() {
    let tau = 8.0;
    for (name, chart) in examples() {
        let s = tmax_series(&chart).unwrap();
        let lam: Vec<f64> = chart.lambda().iter().map(|l| l.mid()).collect();
        for th in common::probe_points(chart.m()) {
            let (_, passing) = common::rk4_orbit(&chart.field, &chart.eval_f64(&th), tau, 1e-3);
            let later: Vec<f64> = th.iter().zip(&lam).map(|(t, l)| t * (l * tau).exp()).collect();
            let total = passing + s.eval_f64(&later);
            assert!((total - s.eval_f64(&th)).abs() <= 1e-6, "{name} {th:?}: {total} vs {}", s.eval_f64(&th));
        }
    }
}

#[test]
fn blowup_time_vanishes_at_the_horizon_at_least_linearly() {
    for (name, chart) in examples() {
        let s = tmax_series(&chart).unwrap();
        for d in common::decay_directions(chart.m()) {
            let q = common::decay_exponent(&s, &d);
            assert!(q >= 1.0, "{name} {d:?}: exponent {q}");
        }
        assert_eq!(s.eval_point(&vec![0.0; chart.m()]).unwrap().mag(), 0.0);
    }
}

fn compare_truncations(model: &str, point: &str, n: usize, sigma: f64) {
    let lo = common::chart(model, point, n, Some(sigma));
    let hi = common::chart(model, point, n + 20, Some(sigma));
    let (sl, sh) = (tmax_series(&lo).unwrap(), tmax_series(&hi).unwrap());
    for th in common::probe_points(lo.m()).into_iter().chain([vec![1.0; lo.m()], vec![-1.0; lo.m()]]) {
        let (a, b) = (sl.eval_point(&th).unwrap(), sh.eval_point(&th).unwrap());
        assert!(a.intersects(&b), "{model} {th:?}: {a} vs {b}");
        assert!(b.width() <= a.width(), "{model} {th:?}: {:e} > {:e}", b.width(), a.width());
    }
}

#[test]
fn larger_truncation_refines_example1() {
    compare_truncations("example1", "p2", TABLE_N, TABLE_SIGMA);
}

#[test]
fn larger_truncation_refines_example2() {
    let sigma = common::chart("example2", "p2", 60, None).skeleton.sigma;
    compare_truncations("example2", "p2", 60, sigma);
}

#[test]
fn larger_truncation_refines_example3() {
    compare_truncations("example3", "pinf_s_plus", 100, SADDLE_SIGMA);
}

#[test]
fn example1_time_is_monotone_along_the_chart() {
    let chart = common::chart("example1", "p2", TABLE_N, Some(TABLE_SIGMA));
    let s = tmax_series(&chart).unwrap();
    let t: Vec<_> = (0..=100).map(|k| s.eval_point(&[-1.0 + k as f64 / 50.0]).unwrap()).collect();
    let up = t.windows(2).all(|w| w[0].hi() < w[1].lo());
    let down = t.windows(2).all(|w| w[0].lo() > w[1].hi());
    assert!(up || down);
}

#[test]
fn term_derivative_matches_finite_differences() {
    for (name, chart) in examples().into_iter().filter(|(_, c)| c.m() == 1) {
        let s = tmax_series(&chart).unwrap();
        let h = 1e-5;
        let fd = (s.eval_f64(&[0.3 + h]) - s.eval_f64(&[0.3 - h])) / (2.0 * h);
        let d = s.derivative_f64(0.3);
        assert!((fd - d).abs() <= 1e-8, "{name}: {fd} vs {d}");
    }
}
