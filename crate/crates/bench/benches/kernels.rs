use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use snnbound::datasets::Dataset;
use snnbound::linalg::spectral_norm_default;
use snnbound::measures::{init_activation_sum, measure_report};
use snnbound::model::init_kaiming;
use snnbound::rademacher::{mc_rad_estimate, pga_sup_estimate};
use snnbound::trainer::batch_gradient;
use snnbound::{Activation, Matrix, RadConfig, SeededRng};

fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = SeededRng::new(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.normal())
}

fn labels(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = SeededRng::new(seed);
    (0..n).map(|_| if rng.below(2) == 0 { -1.0 } else { 1.0 }).collect()
}

fn bench_matmul(c: &mut Criterion) {
    let mut group = c.benchmark_group("matmul");
    for &m in &[64usize, 256, 1024] {
        let w = gaussian(m, 1024, 1);
        let x = gaussian(1024, 256, 2);
        group.throughput(Throughput::Elements((2 * m * 1024 * 256) as u64));
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, _| {
            b.iter(|| black_box(w.matmul(&x).unwrap()))
        });
    }
    group.finish();
}

fn bench_spectral(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral_norm");
    for &m in &[64usize, 512] {
        let w = gaussian(m, 1024, 3);
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, _| {
            b.iter(|| black_box(spectral_norm_default(&w, 0).unwrap()))
        });
    }
    group.finish();
}

fn bench_gradient(c: &mut Criterion) {
    let mut group = c.benchmark_group("batch_gradient");
    for &m in &[64usize, 1024] {
        let (params, _) = init_kaiming(&mut SeededRng::new(4), m, 1024, 1, Activation::Relu).unwrap();
        let xb = gaussian(256, 1024, 5);
        let yb = labels(256, 6);
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, _| {
            b.iter(|| black_box(batch_gradient(&params, &xb, &yb).unwrap()))
        });
    }
    group.finish();
}

fn bench_measures(c: &mut Criterion) {
    let ds = Dataset::new_unnormalized(gaussian(1024, 2000, 7), labels(2000, 8), "bench").unwrap();
    let (mut params, snap) = init_kaiming(&mut SeededRng::new(9), 256, 1024, 1, Activation::Relu).unwrap();
    params.w = params.w.add(&gaussian(256, 1024, 10).scale(0.01)).unwrap();
    let mut group = c.benchmark_group("measures");
    group.sample_size(10);
    group.bench_function("measure_report/m256_n2000", |b| {
        b.iter(|| black_box(measure_report(&params, &snap, &ds).unwrap()))
    });
    group.bench_function("init_activation_sum/m256_n2000", |b| {
        b.iter(|| black_box(init_activation_sum(snap.w0(), ds.x(), Activation::Relu).unwrap()))
    });
    group.finish();
}

fn bench_rademacher(c: &mut Criterion) {
    let x = gaussian(4, 8, 11);
    let w0 = gaussian(4, 4, 12);
    let sigma = Matrix::from_fn(8, 1, |i, _| if i % 3 == 0 { -1.0 } else { 1.0 });
    let cfg = RadConfig::default();
    c.bench_function("pga_sup/n8_d4_m4", |b| {
        b.iter(|| black_box(pga_sup_estimate(&sigma, &x, &w0, 3.0, 1.0, Activation::Relu, &cfg).unwrap()))
    });
    let quick = RadConfig { pga_steps: 50, pga_restarts: 2, ..RadConfig::default() };
    let mut group = c.benchmark_group("mc_rad_estimate");
    group.sample_size(10);
    group.bench_function("n8_enumerated", |b| {
        b.iter(|| black_box(mc_rad_estimate(&x, &w0, 3.0, 1.0, Activation::Relu, 1, &quick).unwrap()))
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_matmul,
    bench_spectral,
    bench_gradient,
    bench_measures,
    bench_rademacher
);
criterion_main!(benches);
