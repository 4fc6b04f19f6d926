use std::hint::black_box;

use burgerlab_core::generators::random_band_limited;
use burgerlab_core::*;
use criterion::{criterion_group, criterion_main, Criterion};

fn spectral(c: &mut Criterion) {
    let g = TorusGrid::new(2, 128).unwrap();
    let u = random_band_limited(&g, 2, 20, 1.0, 1);
    c.bench_function("advect 2d n=128", |b| b.iter(|| advect(black_box(&u), &u).unwrap()));
    c.bench_function("heat semigroup 2d n=128", |b| {
        b.iter(|| heat_semigroup_apply(black_box(&u), 0.1, 0.01).unwrap())
    });
}

fn solvers(c: &mut Criterion) {
    let g = TorusGrid::new(1, 256).unwrap();
    let u0 = random_band_limited(&g, 1, 8, 1.0, 2);
    let mut group = c.benchmark_group("solvers");
    group.sample_size(10);
    group.bench_function("ifrk4 1d n=256 200 steps", |b| {
        b.iter(|| if_rk4_solve(black_box(&u0), &Force::Zero, 0.1, 0.2, 200).unwrap())
    });
    let cfg = PicardConfig::new(1, 2.0, 0.1, 0.2, 200);
    group.bench_function("picard 1d n=256 200 steps", |b| {
        b.iter(|| picard_solve(black_box(&u0), &Force::Zero, &cfg).unwrap())
    });
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let g = TorusGrid::new(1, 128).unwrap();
    let u0 = random_band_limited(&g, 1, 4, 1.0, 3);
    let traj = if_rk4_solve(&u0, &Force::Zero, 0.1, 0.2, 100).unwrap();
    let mut group = c.benchmark_group("feynman-kac");
    group.sample_size(10);
    for mode in [Interpolation::Linear, Interpolation::Spectral] {
        let cfg = FlowConfig::new(0.1, 0.2, 0.02, 2e-3, 2000, 7).with_interpolation(mode);
        group.bench_function(format!("{mode:?} 2000 paths"), |b| {
            b.iter(|| feynman_kac_estimate(&traj, &Force::Zero, black_box(&[1.0]), &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, spectral, solvers, monte_carlo);
criterion_main!(benches);
