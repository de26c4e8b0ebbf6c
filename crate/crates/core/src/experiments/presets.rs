//! Built-in study plans at desk scale (20 replicates) and full scale (100).

use crate::error::{Result, TailmixError};
use crate::mixture::ModelKind;
use crate::select::{Direction, SelectConfig, Strength};

use super::{ExperimentPlan, Expectation, LambdaLaw, StudyKind, TruthModel};

pub const PRESETS: [&str; 4] = ["fig2-desk", "fig2-paper", "table2-desk", "table2-paper"];

const DEFAULT_SEED: u64 = 20_231_017;

/// Tail exponent of the EP and P truths in the selection studies.
const SELECTION_ALPHA: f64 = 1.6;

pub fn preset(name: &str) -> Result<Vec<ExperimentPlan>> {
    match name {
        "fig2-desk" => Ok(vec![recovery(name, vec![1.2, 1.4, 1.6, 1.8, 2.0], 20)]),
        "fig2-paper" => Ok(vec![recovery(name, (1..=8).map(|i| 1.0 + i as f64 / 8.0).collect(), 100)]),
        "table2-desk" => Ok(selection_rows(name, 20)),
        "table2-paper" => Ok(selection_rows(name, 100)),
        _ => Err(TailmixError::Contract(format!("unknown preset `{name}`; available presets: {}", PRESETS.join(", ")))),
    }
}

fn ep_truth(alpha: f64) -> TruthModel {
    TruthModel { kind: ModelKind::EP, alpha, weights: vec![0.5, 0.5], lambdas: LambdaLaw::Uniform { low: 0.1, high: 0.3 } }
}

fn recovery(name: &str, alpha_grid: Vec<f64>, replicates: usize) -> ExperimentPlan {
    ExperimentPlan {
        name: name.to_string(),
        study: StudyKind::AlphaRecovery,
        truth: ep_truth(alpha_grid[0]),
        alpha_grid,
        sample_sizes: vec![10_000],
        replicates,
        seed: DEFAULT_SEED,
        comparison: None,
        expectations: vec![],
        hill_tail_fraction: 0.1,
        select: SelectConfig::default(),
    }
}

fn expect(n: usize, min_strength: Strength, direction: Direction) -> Expectation {
    Expectation { n, min_strength, direction }
}

fn selection_rows(name: &str, replicates: usize) -> Vec<ExperimentPlan> {
    let row = |suffix: &str, truth: TruthModel, sizes: Vec<usize>, cmp: (ModelKind, ModelKind), exp: Vec<Expectation>| {
        ExperimentPlan {
            name: format!("{name}/{suffix}"),
            study: StudyKind::Selection,
            truth,
            alpha_grid: vec![],
            sample_sizes: sizes,
            replicates,
            seed: DEFAULT_SEED,
            comparison: Some(cmp),
            expectations: exp,
            hill_tail_fraction: 0.1,
            select: SelectConfig::default(),
        }
    };
    use Direction::*;
    use ModelKind::*;
    vec![
        row(
            "ep-truth/ep-vs-p",
            ep_truth(SELECTION_ALPHA),
            vec![1000, 5000],
            (EP, P),
            vec![expect(1000, Strength::Substantial, Favors), expect(5000, Strength::Decisive, Favors)],
        ),
        row(
            "ep-truth/eep-vs-ep",
            ep_truth(SELECTION_ALPHA),
            vec![1000, 10_000],
            (EEP, EP),
            vec![expect(1000, Strength::Substantial, Against), expect(10_000, Strength::Strong, Against)],
        ),
        row(
            "eep-truth/eep-vs-ep",
            TruthModel {
                kind: EEP,
                alpha: SELECTION_ALPHA,
                weights: vec![0.3, 0.4, 0.3],
                lambdas: LambdaLaw::Fixed { values: vec![1.5, 0.15] },
            },
            vec![9000],
            (EEP, EP),
            vec![expect(9000, Strength::Substantial, Favors)],
        ),
        row(
            "p-truth/ep-vs-p",
            TruthModel { kind: P, alpha: SELECTION_ALPHA, weights: vec![1.0], lambdas: LambdaLaw::Fixed { values: vec![] } },
            vec![5000],
            (EP, P),
            vec![expect(5000, Strength::Negligible, Against)],
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate() {
        for name in PRESETS {
            for plan in preset(name).unwrap() {
                plan.validate().unwrap();
            }
        }
        assert_eq!(preset("fig2-paper").unwrap()[0].alpha_grid.len(), 8);
    }

    #[test]
    fn unknown_preset_lists_names() {
        let err = preset("fig9").unwrap_err().to_string();
        for name in PRESETS {
            assert!(err.contains(name), "{err}");
        }
    }
}
