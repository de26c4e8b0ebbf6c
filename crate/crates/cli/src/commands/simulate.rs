use std::fs::File;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Args;
use serde::Serialize;
use tailmix::ingest::write_series;
use tailmix::mixture::sample_mixture;
use tailmix::{BinnedSeries, ExpMode};

use super::ModelFile;
use crate::report::{display, file_name, write_json, RunManifest};

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Model file: `{"kind": "EP", "alpha": 1.6, "weights": [0.5, 0.5], "lambdas": [0.2]}`.
    #[arg(long)]
    model: PathBuf,
    /// Number of samples.
    #[arg(long)]
    n: usize,
    #[arg(long, env = "TAILMIX_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Serialize)]
struct Config<'a> {
    model: &'a ModelFile,
    n: usize,
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    output: String,
    n: usize,
    model: &'a ModelFile,
}

pub fn run(args: SimulateArgs) -> anyhow::Result<()> {
    if args.n == 0 {
        bail!("--n must be at least 1");
    }
    let model = ModelFile::load(&args.model)?;
    if model.exp_mode == ExpMode::PaperLiteral {
        bail!(
            "cannot sample in paper-literal mode: λe^(−λx) is not a normalized law on the integers, \
             so there is no distribution to draw from; use exp_mode \"discrete\""
        );
    }
    let spec = model.spec()?;
    let params = model.params();
    params.validate(&spec)?;
    let counts = sample_mixture(&spec, &params, args.n, args.seed)?;

    crate::ensure_dir(&args.out_dir)?;
    let stem = args.model.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into());
    let path = args.out_dir.join(format!("{stem}.n{}.seed{}.series", args.n, args.seed));
    let series = BinnedSeries::from_samples(counts, format!("simulated:{stem}:seed{}", args.seed));
    let mut out = std::io::BufWriter::new(File::create(&path).with_context(|| format!("cannot write {}", path.display()))?);
    write_series(&mut out, &series)?;
    std::io::Write::flush(&mut out)?;

    let manifest = RunManifest::new("simulate", vec![display(&args.model)], Some(args.seed), Config { model: &model, n: args.n })?;
    write_json(
        &args.out_dir.join(format!("{stem}.n{}.seed{}.simulate-report.json", args.n, args.seed)),
        &manifest,
        "simulate",
        SimulateReport { output: file_name(&path), n: args.n, model: &model },
    )?;
    println!("{}", path.display());
    Ok(())
}
