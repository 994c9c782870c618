use criterion::{black_box, criterion_group, criterion_main, Criterion};

use stirap_gate::parallel::{par_map, seq_map};
use stirap_gate::pipeline;
use stirap_gate::pulses::power_optimal_omega0;

// A batch of independent Λ-model trajectories, one per amplitude error.
fn batch() -> Vec<f64> {
    (0..16).map(|i| -0.2 + 0.4 * i as f64 / 15.0).collect()
}

fn bench_propagation(c: &mut Criterion) {
    let t_g = 40.0;
    let om = power_optimal_omega0(t_g).unwrap();
    let etas = batch();
    let run = |&eta: &f64| pipeline::rwa_gate_error(t_g, om, eta, 1e-10).unwrap();

    let mut g = c.benchmark_group("lambda_batch");
    g.sample_size(10);
    g.bench_function("sequential", |b| b.iter(|| black_box(seq_map(&etas, run))));
    g.bench_function("parallel", |b| b.iter(|| black_box(par_map(&etas, run))));
    g.finish();

    let xs: Vec<f64> = (0..8).map(|i| 10.0 + 5.0 * i as f64).collect();
    let chi = std::f64::consts::TAU * 0.2;
    let point = |&x: &f64| pipeline::bad_lambda_point(chi, x * std::f64::consts::PI / chi, 1e-10).unwrap();
    let mut g = c.benchmark_group("bad_lambda_batch");
    g.sample_size(10);
    g.bench_function("sequential", |b| b.iter(|| black_box(seq_map(&xs, point))));
    g.bench_function("parallel", |b| b.iter(|| black_box(par_map(&xs, point))));
    g.finish();
}

criterion_group!(benches, bench_propagation);
criterion_main!(benches);
