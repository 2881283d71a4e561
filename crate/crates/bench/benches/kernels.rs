use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use immse_bench::exponential_operator;
use immse_core::infocore::{innovations_filter, verify_identities, GammaGrid};
use immse_core::kernels::TimeGrid;
use immse_core::operator::{eigendecompose, eigenvalues_only};
use immse_core::sim::{binary_errors, run_binary_sim, SignalModel, SimConfig};
use immse_core::stationary::{yj_integral, SpectralDensity};

fn bench_eigensolver(c: &mut Criterion) {
    let mut group = c.benchmark_group("jacobi");
    group.sample_size(10);
    for n in [100usize, 200, 400] {
        let op = exponential_operator(n);
        group.bench_with_input(BenchmarkId::new("values_only", n), &op, |b, op| {
            b.iter(|| eigenvalues_only(black_box(op.matrix())).unwrap())
        });
    }
    let op = exponential_operator(200);
    group.bench_function("with_vectors_200", |b| {
        b.iter(|| eigendecompose(black_box(&op)).unwrap())
    });
    group.finish();
}

fn bench_innovations(c: &mut Criterion) {
    let op = exponential_operator(200);
    c.bench_function("innovations_filter_200", |b| {
        b.iter(|| innovations_filter(black_box(op.matrix()), 1.0, None, false).unwrap())
    });
}

fn bench_curves(c: &mut Criterion) {
    let op = exponential_operator(200);
    let spectrum = eigendecompose(&op).unwrap();
    let grid = GammaGrid::log_spaced(1e-3, 1e2, 50).unwrap();
    c.bench_function("identity_curves_50pts", |b| {
        b.iter(|| verify_identities(black_box(&spectrum), black_box(&grid)))
    });
}

fn bench_yj(c: &mut Criterion) {
    let density = SpectralDensity::scalar(1.0, 1.0).unwrap();
    c.bench_function("yj_integral", |b| {
        b.iter(|| yj_integral(black_box(&density), black_box(1.0)).unwrap())
    });
}

fn bench_binary(c: &mut Criterion) {
    c.bench_function("binary_errors_quadrature", |b| {
        b.iter(|| binary_errors(black_box(1.0), 128).unwrap())
    });
    let grid = TimeGrid::midpoint(1.0, 64).unwrap();
    let cfg =
        SimConfig::new(7, 2000, 1.0, grid, SignalModel::Binary { phi: vec![1.0; 64] }).unwrap();
    let mut group = c.benchmark_group("binary_sim");
    group.sample_size(10);
    group.bench_function("mc_2000_paths", |b| {
        b.iter(|| run_binary_sim(black_box(&cfg), 128).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_eigensolver,
    bench_innovations,
    bench_curves,
    bench_yj,
    bench_binary
);
criterion_main!(benches);
