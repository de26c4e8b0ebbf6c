use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::Args;
use serde::Serialize;
use tailmix::experiments::{self, preset, ExperimentPlan, ExperimentReport, PRESETS};

use crate::report::{display, write_json, RunManifest};

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["preset", "plan"])))]
pub struct ValidateArgs {
    /// Built-in study: fig2-desk, fig2-paper, table2-desk, table2-paper.
    #[arg(long)]
    preset: Option<String>,
    /// JSON file holding one plan or a list of plans.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Overrides the seed of every plan.
    #[arg(long, env = "TAILMIX_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Serialize)]
struct Config<'a> {
    preset: Option<&'a str>,
    plans: &'a [ExperimentPlan],
}

#[derive(Serialize)]
struct ValidateReport<'a> {
    studies: &'a [ExperimentReport],
    /// Whether every selection row with an expectation met it; absent when
    /// no row carries one.
    expectations_met: Option<bool>,
}

fn load_plans(args: &ValidateArgs) -> anyhow::Result<(String, Vec<ExperimentPlan>)> {
    if let Some(name) = &args.preset {
        return Ok((name.clone(), preset(name)?));
    }
    let path = args.plan.as_ref().expect("clap enforces one source");
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))?;
    let plans = if value.is_array() { serde_json::from_value(value)? } else { vec![serde_json::from_value(value)?] };
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "plan".into());
    Ok((stem, plans))
}

fn file_safe(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

pub fn run(args: ValidateArgs) -> anyhow::Result<()> {
    let (label, mut plans) = load_plans(&args)?;
    if plans.is_empty() {
        bail!("no plans to run; presets: {}", PRESETS.join(", "));
    }
    if let Some(seed) = args.seed {
        for p in &mut plans {
            p.seed = seed;
        }
    }
    for p in &plans {
        p.validate()?;
    }
    crate::ensure_dir(&args.out_dir)?;

    let mut reports = Vec::new();
    for plan in &plans {
        let started = Instant::now();
        let report = experiments::run(plan)?;
        eprintln!("{}: {:.1}s", plan.name, started.elapsed().as_secs_f64());
        let csv = args.out_dir.join(format!("{}.csv", file_safe(&plan.name)));
        std::fs::write(&csv, report.to_csv()).with_context(|| format!("cannot write {}", csv.display()))?;
        reports.push(report);
    }
    let checks: Vec<bool> = reports.iter().flat_map(|r| r.selection.iter().filter_map(|row| row.meets_expectation)).collect();
    let expectations_met = if checks.is_empty() { None } else { Some(checks.iter().all(|&b| b)) };
    for r in &reports {
        for p in &r.recovery {
            if let (Some(m), Some(h)) = (p.mle_alpha, p.hill_alpha) {
                println!("{}: α = {}: MLE median {:.4} (IQR {:.4}), Hill median {:.4} (IQR {:.4})", r.plan.name, p.true_alpha, m.median, m.iqr(), h.median, h.iqr());
            }
        }
        for row in &r.selection {
            if let (Some(q), Some(label)) = (row.log10_bf, row.median_strength) {
                println!(
                    "{}: n = {}: median log10 BF {}/{} = {:.2} ({} {:?}), chosen {:?}",
                    r.plan.name, row.n, row.larger, row.smaller, q.median, label.strength, label.direction, row.chosen_counts
                );
            }
        }
    }

    let inputs = args.plan.as_deref().map(display).into_iter().collect();
    let manifest = RunManifest::new("validate", inputs, args.seed, Config { preset: args.preset.as_deref(), plans: &plans })?;
    write_json(
        &args.out_dir.join(format!("{}.validate-report.json", file_safe(&label))),
        &manifest,
        "validate",
        ValidateReport { studies: &reports, expectations_met },
    )
}
