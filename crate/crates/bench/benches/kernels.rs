use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pcalab_core::contours::analyze;
use pcalab_core::dynamics::TransitionContext;
use pcalab_core::exact::{build_matrix, stationary_distribution};
use pcalab_core::model::{BoundaryCondition, CouplingKernel, LatticeBox, PcaParams, Spin, SpinConfig};
use pcalab_core::rng::{CounterRng, UniformSource};

fn context(sides: &[usize], beta: f64, bc: BoundaryCondition) -> TransitionContext {
    let params = PcaParams::new(beta, 0.1, CouplingKernel::nearest_neighbor_2d(0.5, 1.0, 1.0)).unwrap();
    TransitionContext::new(params, LatticeBox::new(sides).unwrap(), bc).unwrap()
}

fn noisy(region: LatticeBox, seed: u64) -> SpinConfig {
    let mut u = vec![0.0; region.len()];
    CounterRng::new(seed).fill(0, 0, &mut u);
    SpinConfig::from_fn(region.clone(), |s| Spin::from_bit(u[region.index_of(s).unwrap()] < 0.5))
}

fn step(c: &mut Criterion) {
    let ctx = context(&[64, 64], 0.6, BoundaryCondition::plus());
    let source = CounterRng::new(7);
    let start = noisy(ctx.region().clone(), 1);
    c.bench_function("step_sample 64x64", |b| {
        b.iter(|| ctx.step_sample(black_box(&start), 3, &source))
    });
    c.bench_function("step_sample_parallel 64x64", |b| {
        b.iter(|| ctx.step_sample_parallel(black_box(&start), 3, &source, 1024))
    });
}

fn exact(c: &mut Criterion) {
    let ctx = context(&[3, 3], 0.8, BoundaryCondition::Periodic);
    c.bench_function("build_matrix 3x3", |b| {
        b.iter(|| build_matrix(black_box(&ctx)).unwrap())
    });
    let p = build_matrix(&ctx).unwrap();
    c.bench_function("stationary_distribution 3x3", |b| {
        b.iter(|| stationary_distribution(black_box(&p)).unwrap())
    });
}

fn contours(c: &mut Criterion) {
    let config = noisy(LatticeBox::new(&[32, 32]).unwrap(), 2);
    c.bench_function("contour classes 32x32", |b| {
        b.iter(|| analyze(black_box(&config)).unwrap())
    });
}

criterion_group!(benches, step, exact, contours);
criterion_main!(benches);
