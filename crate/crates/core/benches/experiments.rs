use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dsnet::experiments::{self, ExperimentConfig};
use dsnet::par::Execution;

fn small() -> ExperimentConfig {
    ExperimentConfig {
        n_realizations: 8,
        n_trials_per_realization: 2,
        initial_failure_counts: vec![10, 20],
        reduce_iterations: 50,
        ..ExperimentConfig::desk()
    }
}

fn studies(c: &mut Criterion) {
    let cfg = small();
    let mut group = c.benchmark_group("studies");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let name = format!("{exec:?}").to_lowercase();
        group.bench_with_input(BenchmarkId::new("robustness", &name), &exec, |b, &e| {
            b.iter(|| experiments::run_robustness_comparison(black_box(&cfg), e).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("cost", &name), &exec, |b, &e| {
            b.iter(|| experiments::run_cost_comparison(black_box(&cfg), e).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("mitigation", &name), &exec, |b, &e| {
            b.iter(|| experiments::run_mitigation_study(black_box(&cfg), e).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, studies);
criterion_main!(benches);
