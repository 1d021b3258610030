use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use qgeo_bench::{density_3d, packet};
use qgeo_core::evolve::{evolve_se, Scheme};
use qgeo_core::hilbert::{random_state, HermitianOperator};
use qgeo_core::madelung::quantum_potential;
use qgeo_core::observable::bracket_report;
use qgeo_core::weyl::{gauge_from_density, ricci_scalar, WeylManifold};

fn bench_brackets(c: &mut Criterion) {
    let mut group = c.benchmark_group("bracket_report");
    for dim in [4usize, 8, 16] {
        let a = HermitianOperator::random(dim, 1);
        let b = HermitianOperator::random(dim, 2);
        let x = random_state(dim, 3).unwrap();
        group.bench_function(format!("dim_{dim}"), |bench| {
            bench.iter(|| bracket_report(black_box(&a), black_box(&b), black_box(&x), 1.0))
        });
    }
    group.finish();
}

fn bench_split_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("split_step_100_steps");
    group.sample_size(20);
    for nodes in [512usize, 2048] {
        let w = packet(nodes);
        group.bench_function(format!("nodes_{nodes}"), |bench| {
            bench.iter_batched(
                || w.clone(),
                |w| evolve_se(&w, 1e-3, 100, 100, Scheme::SplitStep).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn bench_quantum_potential(c: &mut Criterion) {
    let rho = density_3d(48);
    c.bench_function("quantum_potential_48cubed", |bench| {
        bench.iter(|| quantum_potential(black_box(rho.field()), 1.0, 1.0))
    });
}

fn bench_curvature_chain(c: &mut Criterion) {
    let rho = density_3d(24);
    let gauge = gauge_from_density(rho.field(), 3).unwrap();
    let manifold = WeylManifold::flat(rho.grid().clone(), gauge).unwrap();
    let mut group = c.benchmark_group("weyl_scalar_chain_24cubed");
    group.sample_size(20);
    group.bench_function("ricci_scalar", |bench| {
        bench.iter(|| ricci_scalar(black_box(&manifold)))
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_brackets,
    bench_split_step,
    bench_quantum_potential,
    bench_curvature_chain
);
criterion_main!(benches);
