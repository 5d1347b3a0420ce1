//! Parallel vs sequential throughput on the crate's two hot loops:
//! ensemble orbit iteration and polydisc boundary transport.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use annulab::exec;

/// Standard-map style kernel: enough flops per item to be representative.
fn orbit_kernel(state: &(f64, f64)) -> (f64, f64) {
    let (mut theta, mut r) = *state;
    for _ in 0..2000 {
        theta = (theta + r).rem_euclid(1.0);
        r -= 1e-3 * (2.0 * std::f64::consts::PI * theta).sin();
    }
    (theta, r)
}

fn bench_ensemble(c: &mut Criterion) {
    let mut group = c.benchmark_group("ensemble_iteration");
    for &n in &[64usize, 512] {
        let ensemble: Vec<(f64, f64)> = (0..n)
            .map(|i| (i as f64 * 0.618_033_988_75 % 1.0, 0.3 + 1e-3 * i as f64))
            .collect();
        group.bench_with_input(BenchmarkId::new("parallel", n), &ensemble, |b, e| {
            b.iter(|| exec::map_items(e, orbit_kernel))
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &ensemble, |b, e| {
            b.iter(|| exec::map_items_seq(e, orbit_kernel))
        });
    }
    group.finish();
}

fn bench_boundary_transport(c: &mut Criterion) {
    let mut group = c.benchmark_group("boundary_transport");
    let samples: Vec<(f64, f64)> = (0..4096)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 4096.0;
            (0.02 * t.cos(), 0.3 + 0.001 * t.sin())
        })
        .collect();
    group.bench_function("parallel", |b| {
        b.iter(|| exec::map_items(&samples, orbit_kernel))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| exec::map_items_seq(&samples, orbit_kernel))
    });
    group.finish();
}

criterion_group!(benches, bench_ensemble, bench_boundary_transport);
criterion_main!(benches);
