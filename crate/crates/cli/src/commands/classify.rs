use std::path::PathBuf;

use anyhow::bail;
use clap::Args;
use serde::Serialize;
use tailmix::mixture::{responsibilities, tail_threshold};

use super::{read_series_file, ModelFile};
use crate::report::{display, print_report, to_json_string, write_json, RunManifest};

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    /// Series file to label.
    #[arg(long)]
    input: PathBuf,
    /// Model file, or a fit-select report (its chosen model is used).
    #[arg(long)]
    model: PathBuf,
    /// Where the labels go; printed when omitted.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Serialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Label {
    Exp,
    Tail,
}

#[derive(Serialize)]
struct LabeledBin {
    index: usize,
    count: u64,
    pareto_responsibility: f64,
    label: Label,
}

#[derive(Serialize)]
struct Fractions {
    exp: f64,
    tail: f64,
}

#[derive(Serialize)]
struct ClassifyReport<'a> {
    input: String,
    model: &'a ModelFile,
    /// Start of the tail regime: every count from here on is labeled `tail`.
    tail_threshold: u64,
    fractions: Fractions,
    bins: Vec<LabeledBin>,
}

pub fn run(args: ClassifyArgs) -> anyhow::Result<()> {
    let model = ModelFile::load(&args.model)?;
    let spec = model.spec()?;
    if spec.n_exp == 0 {
        bail!("classification needs a model with exponential and Pareto components; {} has a Pareto tail only", model.kind);
    }
    let params = model.params();
    let series = read_series_file(&args.input)?;
    series.check_support(spec.x_min)?;
    let x_star = tail_threshold(&spec, &params)?;

    let mut bins = Vec::with_capacity(series.n());
    let mut cache = std::collections::BTreeMap::new();
    for (index, &count) in series.counts.iter().enumerate() {
        let r = match cache.get(&count) {
            Some(&r) => r,
            None => {
                let r = *responsibilities(count, &spec, &params)?.last().expect("Pareto component");
                cache.insert(count, r);
                r
            }
        };
        // Counts at or past x* always have responsibility ≥ ½; below it a
        // heavy tail can still be the likelier source of small counts.
        let label = if r >= 0.5 { Label::Tail } else { Label::Exp };
        bins.push(LabeledBin { index, count, pareto_responsibility: r, label });
    }
    let n = bins.len().max(1) as f64;
    let tail = bins.iter().filter(|b| b.label == Label::Tail).count() as f64 / n;
    let fractions = Fractions { exp: if bins.is_empty() { 0.0 } else { 1.0 - tail }, tail };

    let manifest = RunManifest::new("classify", vec![display(&args.input), display(&args.model)], None, &model)?;
    let report = ClassifyReport { input: display(&args.input), model: &model, tail_threshold: x_star, fractions, bins };
    match &args.out_dir {
        Some(dir) => {
            crate::ensure_dir(dir)?;
            let name = args.input.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            write_json(&dir.join(format!("{name}.labels.json")), &manifest, "classify", report)
        }
        None => {
            print_report(&to_json_string(&manifest, "classify", report)?)
        }
    }
}
