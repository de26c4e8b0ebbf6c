//! Property tests over random parameters, series and traces.

use approx::assert_relative_eq;
use proptest::prelude::*;
use tailmix::ingest::{read_series, write_series};
use tailmix::mixture::{log_likelihood, mixture_pmf, responsibilities, tail_threshold};
use tailmix::select::{strength_label, Direction, LogBase};
use tailmix::{bin_series, BinnedSeries, FlowRecord, MixtureParams, ModelKind, ModelSpec};

fn weights(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.02f64..1.0, k).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        raw.iter().map(|w| w / total).collect()
    })
}

fn eep_params() -> impl Strategy<Value = MixtureParams> {
    (weights(3), 0.05f64..3.0, 0.05f64..3.0, 1.05f64..3.9)
        .prop_map(|(weights, l1, l2, alpha)| MixtureParams { weights, lambdas: vec![l1, l2], alpha })
}

fn ep_params() -> impl Strategy<Value = MixtureParams> {
    (weights(2), 0.05f64..3.0, 1.05f64..3.9).prop_map(|(weights, l, alpha)| MixtureParams { weights, lambdas: vec![l], alpha })
}

fn counts() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(prop_oneof![1u64..20, 1u64..5000], 1..200)
}

fn records(times: &[f64]) -> Vec<FlowRecord> {
    times.iter().map(|&t| FlowRecord::at(t)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loglik_ignores_order(p in eep_params(), xs in counts(), seed in any::<u64>()) {
        let spec = ModelSpec::of(ModelKind::EEP);
        let mut shuffled = xs.clone();
        // deterministic Fisher–Yates driven by the proptest seed
        let mut s = seed | 1;
        for i in (1..shuffled.len()).rev() {
            s ^= s << 13; s ^= s >> 7; s ^= s << 17;
            shuffled.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let a = log_likelihood(&BinnedSeries::from_samples(xs, "a"), &spec, &p).unwrap();
        let b = log_likelihood(&BinnedSeries::from_samples(shuffled, "b"), &spec, &p).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn loglik_is_additive_over_concatenation(p in ep_params(), xs in counts(), ys in counts()) {
        let spec = ModelSpec::of(ModelKind::EP);
        let ll = |v: Vec<u64>| log_likelihood(&BinnedSeries::from_samples(v, "s"), &spec, &p).unwrap();
        let joined: Vec<u64> = xs.iter().chain(&ys).copied().collect();
        assert_relative_eq!(ll(joined), ll(xs) + ll(ys), max_relative = 1e-11);
    }

    #[test]
    fn relabeling_exponentials_changes_nothing(p in eep_params(), x in 1u64..10_000) {
        let spec = ModelSpec::of(ModelKind::EEP);
        let swapped = MixtureParams {
            weights: vec![p.weights[1], p.weights[0], p.weights[2]],
            lambdas: vec![p.lambdas[1], p.lambdas[0]],
            alpha: p.alpha,
        };
        assert_relative_eq!(mixture_pmf(x, &spec, &p).unwrap(), mixture_pmf(x, &spec, &swapped).unwrap(), max_relative = 1e-12);
        let (a, b) = (p.clone().canonicalized(), swapped.canonicalized());
        prop_assert_eq!(&a, &b);
        prop_assert!(a.lambdas[0] >= a.lambdas[1]);
    }

    #[test]
    fn responsibilities_form_a_distribution(p in eep_params(), x in 1u64..100_000) {
        let r = responsibilities(x, &ModelSpec::of(ModelKind::EEP), &p).unwrap();
        prop_assert!(r.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_relative_eq!(r.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pmf_is_a_probability(p in eep_params(), x in 1u64..1_000_000) {
        let v = mixture_pmf(x, &ModelSpec::of(ModelKind::EEP), &p).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0);
    }

    #[test]
    fn tail_threshold_past_the_last_exponential_win(p in ep_params()) {
        let spec = ModelSpec::of(ModelKind::EP);
        let t = tail_threshold(&spec, &p).unwrap();
        prop_assert!(t >= 1);
        let r = |x: u64| responsibilities(x, &spec, &p).unwrap()[1];
        prop_assert!(r(t) >= 0.5);
        if t > 1 {
            prop_assert!(r(t - 1) < 0.5);
        }
        for x in [t + 1, t + 10, 2 * t + 7, 100 * t] {
            prop_assert!(r(x) >= 0.5, "x = {}", x);
        }
        // More Pareto weight can only move the threshold down.
        let mut heavier = p.clone();
        let shift = heavier.weights[0] * 0.5;
        heavier.weights[0] -= shift;
        heavier.weights[1] += shift;
        prop_assert!(tail_threshold(&spec, &heavier).unwrap() <= t);
    }

    #[test]
    fn rebinning_sums_adjacent_windows(times in prop::collection::vec(0.0f64..5000.0, 1..400), w in 1u32..40) {
        let r = records(&times);
        let fine = bin_series(&r, w as f64, None, false).unwrap().counts;
        let coarse = bin_series(&r, 2.0 * w as f64, None, false).unwrap().counts;
        let first = times.iter().copied().fold(f64::INFINITY, f64::min);
        let mut padded = fine.clone();
        if ((first / w as f64).floor() as u64) % 2 == 1 {
            padded.insert(0, 0);
        }
        if padded.len() % 2 == 1 {
            padded.push(0);
        }
        let paired: Vec<u64> = padded.chunks(2).map(|c| c[0] + c[1]).collect();
        prop_assert_eq!(paired, coarse);
        prop_assert_eq!(fine.iter().sum::<u64>(), times.len() as u64);
    }

    #[test]
    fn binning_ignores_record_order(mut times in prop::collection::vec(0.0f64..1000.0, 1..200), w in 1u32..64) {
        let a = bin_series(&records(&times), w as f64, None, true).unwrap();
        times.reverse();
        let b = bin_series(&records(&times), w as f64, None, true).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn series_files_round_trip(xs in prop::collection::vec(0u64..u64::MAX, 0..100), w in 1u32..512, id in "[a-z0-9_-]{0,12}") {
        let s = BinnedSeries::new(xs, w as f64, id);
        let mut buf = Vec::new();
        write_series(&mut buf, &s).unwrap();
        prop_assert_eq!(read_series(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn strength_labels_are_sign_symmetric(v in 0.0f64..50.0) {
        for base in [LogBase::Natural, LogBase::Log10] {
            let (a, b) = (strength_label(v, base), strength_label(-v, base));
            prop_assert_eq!(a.strength, b.strength);
            if v > 0.0 {
                prop_assert_eq!((a.direction, b.direction), (Direction::Favors, Direction::Against));
            }
        }
    }
}
