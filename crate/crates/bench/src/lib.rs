//! Shared fixtures for the benchmarks in `benches/`.

use tailmix::mixture::sample_mixture;
use tailmix::{BinnedSeries, MixtureParams, ModelKind, ModelSpec};

/// EP truth used throughout the benchmarks: half the mass in a slow
/// exponential, half in a Pareto tail with α = 1.6.
pub fn ep_truth() -> MixtureParams {
    MixtureParams { weights: vec![0.5, 0.5], lambdas: vec![0.2], alpha: 1.6 }
}

pub fn ep_series(n: usize, seed: u64) -> BinnedSeries {
    let counts = sample_mixture(&ModelSpec::of(ModelKind::EP), &ep_truth(), n, seed).expect("valid truth");
    BinnedSeries::from_samples(counts, "bench")
}
