use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use specflow_bench::{block_path, smooth_path, split_matrix};
use specflow_core::odeindex::{default_horizon, ode_index_shooting};
use specflow_core::sflow::{sf_crossings, CrossingOptions, PartitionOptions};
use specflow_core::spectral::riesz_region_projector;
use specflow_core::{sf_endpoint, sf_partition, spectral_projector, SpectralRegion, Tolerances};

fn flow_engines(c: &mut Criterion) {
    let tol = Tolerances::default();
    let mut group = c.benchmark_group("sf");
    group.sample_size(10);
    for n in [2, 4, 8] {
        let path = smooth_path(n);
        group.bench_with_input(BenchmarkId::new("endpoint", n), &path, |b, p| {
            b.iter(|| sf_endpoint(black_box(p), &tol).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("partition", n), &path, |b, p| {
            b.iter(|| sf_partition(black_box(p), &PartitionOptions::default(), &tol).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("crossings", n), &path, |b, p| {
            b.iter(|| sf_crossings(black_box(p), &CrossingOptions::default(), &tol).unwrap())
        });
    }
    group.finish();
}

fn projectors(c: &mut Criterion) {
    let tol = Tolerances::default();
    let region = SpectralRegion::RightHalfPlane;
    let mut group = c.benchmark_group("projector");
    for (n, jordan) in [(4, false), (8, false), (8, true)] {
        let a = split_matrix(n, jordan);
        let label = if jordan { format!("{n}-jordan") } else { n.to_string() };
        group.bench_with_input(BenchmarkId::new("schur", &label), &a, |b, a| {
            b.iter(|| spectral_projector(black_box(a), &region, &tol).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("riesz", &label), &a, |b, a| {
            b.iter(|| riesz_region_projector(black_box(a), &region, &tol).unwrap())
        });
    }
    group.finish();
}

fn shooting(c: &mut Criterion) {
    let tol = Tolerances::default();
    let mut group = c.benchmark_group("shooting");
    group.sample_size(10);
    for n in [2, 4, 8] {
        let bp = block_path(n);
        let (t_end, steps) = default_horizon(&bp.path, &tol).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &bp.path, |b, p| {
            b.iter(|| ode_index_shooting(black_box(p), t_end, steps, &tol).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, flow_engines, projectors, shooting);
criterion_main!(benches);
