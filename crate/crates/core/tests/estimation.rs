//! Estimation accuracy against independent oracles and sample-size trends.

use tailmix::experiments::{preset, run_alpha_recovery, Quantiles};
use tailmix::mixture::{log_likelihood, sample_mixture};
use tailmix::{fit_mle, BinnedSeries, FitConfig, MixtureParams, ModelKind, ModelSpec};

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        }
    }
    (lo + hi) / 2.0
}

#[test]
fn pareto_fit_matches_one_dimensional_oracle() {
    let spec = ModelSpec::of(ModelKind::P);
    let counts = sample_mixture(&spec, &MixtureParams::pareto(2.0), 10_000, 31).unwrap();
    let series = BinnedSeries::from_samples(counts, "p");

    // Coarse grid scan to locate the basin, then golden section within it.
    let ll = |a: f64| log_likelihood(&series, &spec, &MixtureParams::pareto(a)).unwrap();
    let grid: Vec<f64> = (1..300).map(|i| 1.0 + i as f64 * 0.01).collect();
    let best = grid.iter().copied().max_by(|a, b| ll(*a).total_cmp(&ll(*b))).unwrap();
    let oracle = golden_max(ll, best - 0.01, best + 0.01, 1e-10);

    let fit = fit_mle(&series, &spec, &FitConfig::default().with_seed(1)).unwrap();
    assert!((fit.params.alpha - 2.0).abs() < 0.05, "{}", fit.params.alpha);
    assert!((fit.params.alpha - oracle).abs() < 1e-6, "fit {} vs oracle {oracle}", fit.params.alpha);
    assert!(fit.loglik >= ll(oracle) - 1e-6);
}

#[test]
fn ep_fit_recovers_tail_exponent() {
    let spec = ModelSpec::of(ModelKind::EP);
    let truth = MixtureParams { weights: vec![0.5, 0.5], lambdas: vec![0.2], alpha: 1.6 };
    let errors: Vec<f64> = (0..5)
        .map(|r| {
            let counts = sample_mixture(&spec, &truth, 10_000, 700 + r).unwrap();
            let fit = fit_mle(&BinnedSeries::from_samples(counts, "ep"), &spec, &FitConfig::default().with_seed(r)).unwrap();
            (fit.params.alpha - 1.6).abs() / 1.6
        })
        .collect();
    let median = Quantiles::from_values(&errors).unwrap().median;
    assert!(median <= 0.05, "median relative error {median}");
}

#[test]
fn estimates_tighten_as_samples_grow() {
    let mut plan = preset("fig2-desk").unwrap().remove(0);
    plan.alpha_grid = vec![1.6];
    plan.sample_sizes = vec![1000, 5000, 10_000, 20_000];
    plan.select.fit.restarts = 10;
    let report = run_alpha_recovery(&plan).unwrap();
    let at = |n: usize| report.recovery.iter().find(|p| p.n == n).unwrap();
    let median_abs_err = |n: usize| {
        let errs: Vec<f64> = at(n).replicates.iter().filter_map(|r| r.mle).map(|e| (e.alpha - 1.6).abs()).collect();
        assert_eq!(errs.len(), 20);
        Quantiles::from_values(&errs).unwrap().median
    };
    let (e1, e5, e20) = (median_abs_err(1000), median_abs_err(5000), median_abs_err(20_000));
    assert!(e1 > e5 && e5 > e20, "median |α̂ − α|: {e1} {e5} {e20}");
    let iqr = |n: usize| at(n).mle_alpha.unwrap().iqr();
    assert!(iqr(1000) > iqr(10_000), "IQR {} vs {}", iqr(1000), iqr(10_000));
}
