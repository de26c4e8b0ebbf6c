pub mod bin;
pub mod classify;
pub mod fit_select;
pub mod simulate;
pub mod validate;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use tailmix::{BinnedSeries, ExpMode, MixtureParams, ModelKind, ModelSpec};

pub fn read_series_file(path: &Path) -> anyhow::Result<BinnedSeries> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    tailmix::ingest::read_series(BufReader::new(file)).with_context(|| format!("in {}", path.display()))
}

/// A model written by hand or taken from a fit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub kind: ModelKind,
    pub alpha: f64,
    /// Mixing fractions, exponentials first and the Pareto weight last.
    pub weights: Vec<f64>,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default = "one")]
    pub x_min: u64,
    #[serde(default = "discrete")]
    pub exp_mode: ExpMode,
}

fn one() -> u64 {
    1
}

fn discrete() -> ExpMode {
    ExpMode::Discrete
}

impl ModelFile {
    pub fn spec(&self) -> anyhow::Result<ModelSpec> {
        Ok(ModelSpec::new(self.kind, self.x_min, self.exp_mode)?)
    }

    pub fn params(&self) -> MixtureParams {
        MixtureParams { weights: self.weights.clone(), lambdas: self.lambdas.clone(), alpha: self.alpha }
    }

    pub fn from_fit(spec: &ModelSpec, params: &MixtureParams) -> Self {
        ModelFile {
            kind: spec.kind(),
            alpha: params.alpha,
            weights: params.weights.clone(),
            lambdas: params.lambdas.clone(),
            x_min: spec.x_min,
            exp_mode: spec.exp_mode,
        }
    }

    /// Reads either a bare model file or a fit-select report, in which case
    /// the chosen model is used.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))?;
        let model = if value.get("kind").and_then(|k| k.as_str()) == Some("fit-select") {
            let Some(chosen) = value.get("chosen").and_then(|c| c.as_str()) else {
                bail!("fit report {} has no chosen model", path.display());
            };
            let fit = value
                .get("models")
                .and_then(|m| m.get(chosen))
                .with_context(|| format!("fit report {} lacks the {chosen} fit", path.display()))?;
            let spec: ModelSpec = serde_json::from_value(fit["spec"].clone())?;
            let params: MixtureParams = serde_json::from_value(fit["params"].clone())?;
            ModelFile::from_fit(&spec, &params)
        } else {
            serde_json::from_value(value).with_context(|| format!("{} is not a model file", path.display()))?
        };
        model.params().validate(&model.spec()?).with_context(|| format!("model in {}", path.display()))?;
        Ok(model)
    }
}
