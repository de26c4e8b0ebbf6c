use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tailmix::dists::hurwitz_zeta;
use tailmix::fit::penalized_objective;
use tailmix::mixture::log_likelihood;
use tailmix::{fit_mle, FitConfig, ModelKind, ModelSpec};
use tailmix_bench::{ep_series, ep_truth};

fn zeta(c: &mut Criterion) {
    let mut g = c.benchmark_group("hurwitz_zeta");
    for s in [1.05, 1.6, 3.0] {
        g.bench_with_input(BenchmarkId::from_parameter(s), &s, |b, &s| b.iter(|| hurwitz_zeta(black_box(s), 1)));
    }
    g.finish();
}

fn likelihood(c: &mut Criterion) {
    let spec = ModelSpec::of(ModelKind::EP);
    let params = ep_truth();
    let mut g = c.benchmark_group("log_likelihood_ep");
    for n in [1_000, 10_000, 100_000] {
        let series = ep_series(n, 1);
        g.bench_with_input(BenchmarkId::from_parameter(n), &series, |b, s| b.iter(|| log_likelihood(s, &spec, black_box(&params))));
    }
    g.finish();

    let series = ep_series(10_000, 1);
    let bounds = FitConfig::default().bounds();
    let free = [0.5, 0.2, 1.6];
    c.bench_function("penalized_objective_ep_10000", |b| {
        b.iter(|| penalized_objective(&series, &spec, black_box(&free), 1e-5, bounds))
    });
}

fn fitting(c: &mut Criterion) {
    let spec = ModelSpec::of(ModelKind::EP);
    let series = ep_series(10_000, 2);
    let cfg = FitConfig::default().with_seed(3);
    let mut g = c.benchmark_group("fit_mle");
    g.sample_size(10);
    g.bench_function("ep_10000_20_restarts", |b| b.iter(|| fit_mle(&series, &spec, &cfg)));
    g.finish();
}

criterion_group!(benches, zeta, likelihood, fitting);
criterion_main!(benches);
