//! BIC, log Bayes factors and the nested P → EP → EEP selection rule.
//!
//! `ln BF(a, b) ≈ BIC(a) − BIC(b)`. A larger model is accepted only when its
//! natural-log Bayes factor against the next smaller model strictly exceeds the
//! threshold (10 by default, odds above e¹⁰ ≈ 22 000:1).

use serde::{Deserialize, Serialize};

use crate::error::{Result, TailmixError};
use crate::fit::{fit_mle_with_starts, nested_starts, FitConfig, FittedModel};
use crate::mixture::{BinnedSeries, ModelKind, ModelSpec};
use crate::ExpMode;

pub const DEFAULT_THRESHOLD: f64 = 10.0;

/// `loglik − ln(n)·d/2`.
pub fn bic(loglik: f64, n: usize, d: usize) -> f64 {
    loglik - (n as f64).ln() * d as f64 / 2.0
}

/// `BIC(a) − BIC(b)` on the natural-log scale.
pub fn log_bayes_factor(a: &FittedModel, b: &FittedModel) -> Result<f64> {
    if a.n != b.n || a.series_digest != b.series_digest {
        return Err(TailmixError::Contract(format!(
            "Bayes factor between fits on different series ({} vs {} observations)",
            a.n, b.n
        )));
    }
    if a.spec.exp_mode != b.spec.exp_mode || a.spec.x_min != b.spec.x_min {
        return Err(TailmixError::Contract(
            "Bayes factor between fits with different exponential modes or support".into(),
        ));
    }
    Ok(a.bic - b.bic)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strength {
    Negligible,
    Substantial,
    Strong,
    Decisive,
}

impl Strength {
    pub fn as_str(self) -> &'static str {
        match self {
            Strength::Negligible => "negligible",
            Strength::Substantial => "substantial",
            Strength::Strong => "strong",
            Strength::Decisive => "decisive",
        }
    }
}

impl std::fmt::Display for Strength {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    Natural,
    Log10,
}

/// Which model the evidence points to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Favors the first (numerator) model.
    Favors,
    Neutral,
    /// Favors the second (denominator) model.
    Against,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrengthLabel {
    pub strength: Strength,
    pub direction: Direction,
}

/// Interval labels for `|log BF|`: `[0, a)` negligible, `[a, b)` substantial,
/// `[b, c)` strong, `[c, ∞)` decisive, with cut points 1.3/2/3 (log10) or
/// 3/4.5/7 (natural). NaN is labeled negligible and neutral.
pub fn strength_label(log_bf: f64, base: LogBase) -> StrengthLabel {
    let cuts = match base {
        LogBase::Log10 => [1.3, 2.0, 3.0],
        LogBase::Natural => [3.0, 4.5, 7.0],
    };
    let m = log_bf.abs();
    let strength = if m >= cuts[2] {
        Strength::Decisive
    } else if m >= cuts[1] {
        Strength::Strong
    } else if m >= cuts[0] {
        Strength::Substantial
    } else {
        Strength::Negligible
    };
    let direction = if log_bf > 0.0 {
        Direction::Favors
    } else if log_bf < 0.0 {
        Direction::Against
    } else {
        Direction::Neutral
    };
    StrengthLabel { strength, direction }
}

/// One pairwise comparison with both log scales and labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub larger: ModelKind,
    pub smaller: ModelKind,
    pub log_bf: f64,
    pub log10_bf: f64,
    pub strength: StrengthLabel,
    pub strength_log10: StrengthLabel,
}

impl Comparison {
    pub fn new(larger: &FittedModel, smaller: &FittedModel) -> Result<Self> {
        let log_bf = log_bayes_factor(larger, smaller)?;
        let log10_bf = log_bf / std::f64::consts::LN_10;
        Ok(Self {
            larger: larger.kind(),
            smaller: smaller.kind(),
            log_bf,
            log10_bf,
            strength: strength_label(log_bf, LogBase::Natural),
            strength_log10: strength_label(log10_bf, LogBase::Log10),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectConfig {
    pub fit: FitConfig,
    /// Natural-log Bayes factor a larger model must strictly exceed.
    pub threshold: f64,
    pub exp_mode: ExpMode,
    pub x_min: u64,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self { fit: FitConfig::default(), threshold: DEFAULT_THRESHOLD, exp_mode: ExpMode::Discrete, x_min: 1 }
    }
}

impl SelectConfig {
    pub fn spec(&self, kind: ModelKind) -> Result<ModelSpec> {
        ModelSpec::new(kind, self.x_min, self.exp_mode)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub chosen: ModelKind,
    pub ep_vs_p: Comparison,
    /// Present only when EP beat P and the EEP fit succeeded.
    pub eep_vs_ep: Option<Comparison>,
    pub p: FittedModel,
    pub ep: FittedModel,
    pub eep: Option<FittedModel>,
    /// Set when the EEP fit failed; the choice was then made between P and EP.
    pub eep_failure: Option<String>,
}

impl SelectionResult {
    pub fn log_bf_ep_p(&self) -> f64 {
        self.ep_vs_p.log_bf
    }

    pub fn log_bf_eep_ep(&self) -> Option<f64> {
        self.eep_vs_ep.as_ref().map(|c| c.log_bf)
    }

    pub fn fitted(&self, kind: ModelKind) -> Option<&FittedModel> {
        match kind {
            ModelKind::P => Some(&self.p),
            ModelKind::EP => Some(&self.ep),
            ModelKind::EEP => self.eep.as_ref(),
        }
    }

    pub fn chosen_model(&self) -> &FittedModel {
        self.fitted(self.chosen).expect("chosen model was fitted")
    }
}

/// Failure inside [`select_nested`] with whatever fits completed.
#[derive(Debug, Clone)]
pub struct SelectionFailure {
    pub error: TailmixError,
    pub partial: Vec<FittedModel>,
}

impl std::fmt::Display for SelectionFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({} fits completed)", self.error, self.partial.len())
    }
}

impl std::error::Error for SelectionFailure {}

/// The nested choice given already computed Bayes factors.
pub fn decide(log_bf_ep_p: f64, log_bf_eep_ep: Option<f64>, threshold: f64) -> ModelKind {
    if !(log_bf_ep_p > threshold) {
        return ModelKind::P;
    }
    match log_bf_eep_ep {
        Some(bf) if bf > threshold => ModelKind::EEP,
        _ => ModelKind::EP,
    }
}

/// Fits P and EP; if EP wins decisively, fits EEP and tests it against EP.
///
/// Each larger fit also starts from embeddings of the smaller fit, so its
/// likelihood does not fall below the smaller model's.
pub fn select_nested(series: &BinnedSeries, cfg: &SelectConfig) -> std::result::Result<SelectionResult, SelectionFailure> {
    let fail = |error, partial: Vec<FittedModel>| SelectionFailure { error, partial };
    let spec = |k| cfg.spec(k).map_err(|e| fail(e, vec![]));

    let p_spec = spec(ModelKind::P)?;
    let p = fit_mle_with_starts(series, &p_spec, &cfg.fit, &[]).map_err(|e| fail(e, vec![]))?;

    let ep_spec = spec(ModelKind::EP)?;
    let ep_starts = nested_starts(&p.params, &ep_spec, &cfg.fit);
    let ep = fit_mle_with_starts(series, &ep_spec, &cfg.fit, &ep_starts).map_err(|e| fail(e, vec![p.clone()]))?;

    let ep_vs_p = Comparison::new(&ep, &p).map_err(|e| fail(e, vec![p.clone(), ep.clone()]))?;
    if decide(ep_vs_p.log_bf, None, cfg.threshold) == ModelKind::P {
        return Ok(SelectionResult { chosen: ModelKind::P, ep_vs_p, eep_vs_ep: None, p, ep, eep: None, eep_failure: None });
    }

    let eep_spec = spec(ModelKind::EEP)?;
    let eep_starts = nested_starts(&ep.params, &eep_spec, &cfg.fit);
    match fit_mle_with_starts(series, &eep_spec, &cfg.fit, &eep_starts) {
        Ok(eep) => {
            let cmp = Comparison::new(&eep, &ep).map_err(|e| fail(e, vec![p.clone(), ep.clone(), eep.clone()]))?;
            let chosen = decide(ep_vs_p.log_bf, Some(cmp.log_bf), cfg.threshold);
            Ok(SelectionResult { chosen, ep_vs_p, eep_vs_ep: Some(cmp), p, ep, eep: Some(eep), eep_failure: None })
        }
        Err(e) => Ok(SelectionResult {
            chosen: ModelKind::EP,
            ep_vs_p,
            eep_vs_ep: None,
            p,
            ep,
            eep: None,
            eep_failure: Some(e.to_string()),
        }),
    }
}
