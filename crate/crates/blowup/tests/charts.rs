mod common;

use blowup::field::{build_example1, build_example2, build_example3};
use blowup::interval::Interval;

#[test]
fn horizon_is_invariant_on_the_sphere() {
    let worst = common::horizon_invariance_defect(&build_example2(), &common::sphere_points(200));
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn horizon_is_invariant_on_the_parabolic_curve() {
    let worst = common::horizon_invariance_defect(&build_example3(), &common::parabolic_horizon_points(200));
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn horizon_is_invariant_in_the_directional_chart() {
    assert_eq!(common::horizon_invariance_defect(&build_example1(), &common::directional_horizon_points(200)), 0.0);
}

#[test]
fn certified_charts_conjugate_the_flow() {
    for case in common::certified_cases() {
        let chart = common::build(&case);
        assert!(chart.r0() <= case.r0_bound, "{} {}: r0 {:e}", case.model, case.point, chart.r0());
        let res = common::max_conjugacy_residual(&chart);
        assert!(res <= 1e-8, "{} {} N={}: residual {res:e}", case.model, case.point, case.n_trunc);
    }
}

#[test]
fn chart_enclosures_contain_the_float_chart() {
    let chart = common::chart("example3", "p0", 40, None);
    for t in [-0.9, -0.3, 0.0, 0.4, 1.0] {
        let b = chart.eval(&[Interval::point(t)]).unwrap();
        let p = chart.eval_f64(&[t]);
        assert!(b.iter().zip(&p).all(|(iv, v)| iv.contains(*v)));
    }
}
