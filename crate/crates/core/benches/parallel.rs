use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use cu_bound::markov::{build_kernel_with, expected_error_on, ChainParams, StateSpace, Variant};
use cu_bound::simulate::{estimate_error_with, SimConfig};
use cu_bound::sketch::Rule;
use cu_bound::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn kernel_build(c: &mut Criterion) {
    let space = StateSpace::enumerate(ChainParams::new(50, 4, 3).unwrap()).unwrap();
    let mut group = c.benchmark_group("kernel_build_m50_d4_g3");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| build_kernel_with(black_box(&space), Variant::Upper, exec).unwrap())
        });
    }
    group.finish();
}

fn occupancy(c: &mut Criterion) {
    let space = StateSpace::enumerate(ChainParams::new(50, 4, 3).unwrap()).unwrap();
    let kernel = build_kernel_with(&space, Variant::Lower, Execution::default()).unwrap();
    let mut group = c.benchmark_group("finite_horizon_m50_d4_g3_t250");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| expected_error_on(black_box(&kernel), 250, exec).unwrap())
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let cfg = SimConfig::uniform(20, 3, 1_000, 64, 1, Rule::Conservative);
    let mut group = c.benchmark_group("simulate_m20_d3_t1000_runs64");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| estimate_error_with(black_box(&cfg), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, kernel_build, occupancy, monte_carlo);
criterion_main!(benches);
