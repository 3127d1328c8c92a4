use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use minmax_lab::{
    appendix_f, risk, simulate_estimates, solve_minimax, worst_case_risk, EstimatorSpec, LossSpec,
    MinimaxOptions, RiskMethod, WorstCaseOptions,
};
use minmax_lab_bench::{affine_family, bounded_theta, unit_model};

fn bench_pointwise(c: &mut Criterion) {
    let model = unit_model();
    let est = EstimatorSpec::affine(0.9, 0.1);
    let mut group = c.benchmark_group("pointwise_risk");
    for p in [2.0, 2.5, 4.0] {
        let loss = LossSpec::canonical(p);
        group.bench_with_input(BenchmarkId::new("quadrature", p), &loss, |b, loss| {
            b.iter(|| risk(&model, &est, loss, black_box(1.7), RiskMethod::quadrature()).unwrap())
        });
    }
    group.finish();

    c.bench_function("appendix_f/q=2.2", |b| {
        b.iter(|| appendix_f(black_box(0.3), 1, 2.2).unwrap())
    });
}

fn bench_simulation(c: &mut Criterion) {
    let model = minmax_lab::GaussianLocationModel::new(101, 1.0).unwrap();
    c.bench_function("simulate/median_n101_10k", |b| {
        b.iter(|| simulate_estimates(&model, &EstimatorSpec::median(0.0), 0.0, 10_000, black_box(1)).unwrap())
    });
}

fn bench_worst_case(c: &mut Criterion) {
    let model = unit_model();
    let theta = bounded_theta();
    let opts = WorstCaseOptions::default();
    let est = EstimatorSpec::affine(0.9, 0.0);
    c.bench_function("worst_case/L4_grid256", |b| {
        b.iter(|| worst_case_risk(&model, &est, &LossSpec::canonical(4.0), &theta, &opts).unwrap())
    });
}

fn bench_minimax(c: &mut Criterion) {
    let model = unit_model();
    let theta = bounded_theta();
    let family = affine_family();
    let opts = MinimaxOptions::default();
    let mut group = c.benchmark_group("minimax");
    group.sample_size(10);
    group.bench_function("affine_L2", |b| {
        b.iter(|| solve_minimax(&model, &family, &LossSpec::canonical(2.0), &theta, &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_pointwise, bench_simulation, bench_worst_case, bench_minimax);
criterion_main!(benches);
