use blowup::blowtime::{poincare_series, tmax_poincare_with};
use blowup::drivers::{chart_at, ChartParams, Model};
use blowup::par;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn surface(c: &mut Criterion) {
    let model = Model::load("example2").expect("bundled model");
    let chart = chart_at(&model, "p2", &ChartParams { n_trunc: 30, ..Default::default() }).expect("chart certifies");
    let series = poincare_series(&chart).expect("series");
    let mut group = c.benchmark_group("tmax_surface");
    group.sample_size(10);
    for grid in [11usize, 21] {
        let axis: Vec<f64> = (0..grid).map(|i| -1.0 + 2.0 * i as f64 / (grid - 1) as f64).collect();
        let thetas: Vec<[f64; 2]> = axis.iter().flat_map(|&a| axis.iter().map(move |&b| [a, b])).collect();
        let eval = |th: &[f64; 2]| tmax_poincare_with(&series, &chart, th).ok();
        group.bench_with_input(BenchmarkId::new("sequential", grid), &thetas, |b, t| b.iter(|| par::map_sequential(t, eval)));
        group.bench_with_input(BenchmarkId::new("parallel", grid), &thetas, |b, t| b.iter(|| par::map(t, eval)));
    }
    group.finish();
}

criterion_group!(benches, surface);
criterion_main!(benches);
