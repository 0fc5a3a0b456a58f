use std::hint::black_box;

use annmoc::quadrature::{discrete_ordinates, gauss_legendre};
use annmoc::solver::{sweep, uniform_points};
use annmoc::transport::DEFAULT_SWEEP_TOL;
use annmoc_bench::{decay_set, default_net, manufactured, surrogate};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn forward(c: &mut Criterion) {
    let net = default_net(1);
    c.bench_function("mlp_forward", |b| b.iter(|| net.forward(black_box(0.37))));
}

fn gradient(c: &mut Criterion) {
    let net = default_net(1);
    let mut group = c.benchmark_group("mlp_gradient");
    for n in [11, 101] {
        let set = decay_set(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &set, |b, set| {
            b.iter(|| net.loss_and_gradient(set).unwrap())
        });
    }
    group.finish();
}

fn quadrature(c: &mut Criterion) {
    let mut group = c.benchmark_group("gauss_legendre");
    for n in [10, 100, 1000] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| gauss_legendre(n).unwrap())
        });
    }
    group.finish();
}

fn moc_sweep(c: &mut Criterion) {
    let problem = manufactured();
    let quad = discrete_ordinates(100).unwrap();
    let estimator = surrogate(1);
    let samples = uniform_points(11, 0.0, 1.0);
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("ann_11x100", |b| {
        b.iter(|| sweep(&problem, &quad, &estimator, &samples, DEFAULT_SWEEP_TOL).unwrap())
    });
    group.finish();
}

criterion_group!(benches, forward, gradient, quadrature, moc_sweep);
criterion_main!(benches);
