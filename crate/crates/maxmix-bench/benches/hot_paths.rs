//! Microbenchmarks for the kernels that dominate fitting and simulation.

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use maxmix::fit::likelihood::cl_objective;
use maxmix::fit::ls_objective;
use maxmix::madogram::madogram_mm;
use maxmix::simulate::simulate_smith;
use maxmix::Seed;
use maxmix_bench::{desk_censored, desk_cloud, desk_sites, reference_spec};

fn bench_madogram_mm(c: &mut Criterion) {
    c.bench_function("madogram_mm", |b| {
        b.iter(|| madogram_mm(black_box(0.5), black_box(1.6), black_box(0.7)).unwrap())
    });
}

fn bench_ls_objective(c: &mut Criterion) {
    let spec = reference_spec();
    let cloud = desk_cloud(30, 500);
    c.bench_function("ls_objective_30_sites", |b| {
        b.iter(|| ls_objective(black_box(&spec), black_box(&cloud)).unwrap())
    });
}

fn bench_cl_objective(c: &mut Criterion) {
    let spec = reference_spec();
    let censored = desk_censored(30, 500);
    c.bench_function("cl_objective_30_sites", |b| {
        b.iter(|| cl_objective(black_box(&spec), black_box(&censored), false).unwrap())
    });
}

fn bench_smith_replicates(c: &mut Criterion) {
    let sites = desk_sites(30);
    let seed = Seed::new(3);
    c.bench_function("simulate_smith_10_reps", |b| {
        b.iter(|| simulate_smith(black_box(0.6), &sites, 10, &seed).unwrap())
    });
}

criterion_group!(
    benches,
    bench_madogram_mm,
    bench_ls_objective,
    bench_cl_objective,
    bench_smith_replicates
);
criterion_main!(benches);
