use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use tailmix::mixture::tail_threshold;
use tailmix::select::Comparison;
use tailmix::{select_nested, ExpMode, FitConfig, FittedModel, ModelKind, SelectConfig};

use super::read_series_file;
use crate::report::{display, file_name, print_report, to_json_string, write_json, RunManifest};
use crate::FitOptions;

#[derive(Args, Debug)]
pub struct FitSelectArgs {
    /// A series file, or a directory whose files are each one series.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    fit: FitOptions,
    /// Where reports go; a single-series report is printed when omitted.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct Config<'a> {
    select: &'a SelectConfig,
}

#[derive(Serialize)]
pub struct SeriesReport {
    input: String,
    source_id: String,
    bin_seconds: f64,
    n: usize,
    chosen: ModelKind,
    models: BTreeMap<ModelKind, FittedModel>,
    comparisons: Vec<Comparison>,
    /// Smallest count at which the chosen model attributes a bin to the tail.
    tail_threshold: Option<u64>,
    eep_failure: Option<String>,
}

pub fn select_config(opts: &FitOptions) -> anyhow::Result<SelectConfig> {
    let exp_mode: ExpMode = opts.exp_mode.into();
    if !(opts.threshold.is_finite() && opts.threshold >= 0.0) {
        bail!("threshold must be a nonnegative number");
    }
    let fit = FitConfig { restarts: opts.restarts, seed: opts.seed.unwrap_or(0), ..FitConfig::default() };
    fit.validate()?;
    Ok(SelectConfig { fit, threshold: opts.threshold, exp_mode, x_min: 1 })
}

fn fit_one(path: &Path, cfg: &SelectConfig) -> anyhow::Result<SeriesReport> {
    let series = read_series_file(path)?;
    let sel = select_nested(&series, cfg).with_context(|| format!("fitting {}", path.display()))?;
    let chosen = sel.chosen_model();
    let tail = if chosen.spec.n_exp > 0 { Some(tail_threshold(&chosen.spec, &chosen.params)?) } else { None };
    let mut comparisons = vec![sel.ep_vs_p.clone()];
    comparisons.extend(sel.eep_vs_ep.clone());
    let mut models = BTreeMap::new();
    for fit in [Some(&sel.p), Some(&sel.ep), sel.eep.as_ref()].into_iter().flatten() {
        models.insert(fit.kind(), fit.clone());
    }
    Ok(SeriesReport {
        input: display(path),
        source_id: series.source_id.clone(),
        bin_seconds: series.bin_seconds,
        n: series.n(),
        chosen: sel.chosen,
        models,
        comparisons,
        tail_threshold: tail,
        eep_failure: sel.eep_failure,
    })
}

#[derive(Serialize)]
struct BatchItem {
    input: String,
    status: &'static str,
    report: Option<String>,
    error: Option<String>,
}

#[derive(Serialize)]
struct BatchReport<'a> {
    input: String,
    items: &'a [BatchItem],
    failed: usize,
}

fn list_series(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))? {
        let path = entry?.path();
        let hidden = path.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.'));
        if path.is_file() && !hidden {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

const CSV_HEADER: &str = "input,source_id,bin_seconds,n,status,chosen,alpha,pareto_weight,lambda_1,lambda_2,\
ln_bf_ep_p,log10_bf_ep_p,ln_bf_eep_ep,log10_bf_eep_ep,tail_threshold,error";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_row(input: &str, result: &Result<SeriesReport, String>) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    match result {
        Ok(r) => {
            let fit = &r.models[&r.chosen];
            let bf = |k: ModelKind| r.comparisons.iter().find(|c| c.larger == k).map(|c| c.log_bf);
            let l10 = |v: Option<f64>| v.map(|x| x / std::f64::consts::LN_10);
            [
                csv_field(input),
                csv_field(&r.source_id),
                r.bin_seconds.to_string(),
                r.n.to_string(),
                "ok".into(),
                r.chosen.to_string(),
                fit.params.alpha.to_string(),
                fit.params.pareto_weight().to_string(),
                opt(fit.params.lambdas.first().copied()),
                opt(fit.params.lambdas.get(1).copied()),
                opt(bf(ModelKind::EP)),
                opt(l10(bf(ModelKind::EP))),
                opt(bf(ModelKind::EEP)),
                opt(l10(bf(ModelKind::EEP))),
                r.tail_threshold.map(|t| t.to_string()).unwrap_or_default(),
                String::new(),
            ]
            .join(",")
        }
        Err(e) => format!("{},,,,failed,,,,,,,,,,,{}", csv_field(input), csv_field(e)),
    }
}

pub fn run(args: FitSelectArgs) -> anyhow::Result<()> {
    let cfg = select_config(&args.fit)?;
    let manifest = RunManifest::new("fit-select", vec![display(&args.input)], Some(cfg.fit.seed), Config { select: &cfg })?;

    if !args.input.is_dir() {
        let report = fit_one(&args.input, &cfg)?;
        return match &args.out_dir {
            Some(dir) => {
                crate::ensure_dir(dir)?;
                write_json(&dir.join(report_name(&args.input)), &manifest, "fit-select", &report)
            }
            None => {
                print_report(&to_json_string(&manifest, "fit-select", &report)?)
            }
        };
    }

    let Some(dir) = &args.out_dir else {
        bail!("directory input needs --out-dir");
    };
    let files = list_series(&args.input)?;
    if files.is_empty() {
        bail!("{} contains no series files", args.input.display());
    }
    crate::ensure_dir(dir)?;
    // Per-series failures are recorded and the batch carries on.
    let results: Vec<Result<SeriesReport, String>> =
        files.par_iter().map(|p| fit_one(p, &cfg).map_err(|e| format!("{e:#}"))).collect();

    let mut items = Vec::new();
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for (path, result) in files.iter().zip(&results) {
        csv.push_str(&csv_row(&display(path), result));
        csv.push('\n');
        match result {
            Ok(report) => {
                let out = dir.join(report_name(path));
                let item_manifest = RunManifest { inputs: vec![display(path)], ..manifest.clone() };
                write_json(&out, &item_manifest, "fit-select", report)?;
                items.push(BatchItem { input: display(path), status: "ok", report: Some(file_name(&out)), error: None });
            }
            Err(e) => {
                eprintln!("warning: {}: {e}", path.display());
                items.push(BatchItem { input: display(path), status: "failed", report: None, error: Some(e.clone()) });
            }
        }
    }
    let failed = items.iter().filter(|i| i.status == "failed").count();
    std::fs::write(dir.join("aggregate.csv"), csv)?;
    write_json(
        &dir.join("batch-report.json"),
        &manifest,
        "fit-select-batch",
        BatchReport { input: display(&args.input), items: &items, failed },
    )?;
    println!("{} series, {} failed; reports in {}", items.len(), failed, dir.display());
    Ok(())
}

fn report_name(input: &Path) -> String {
    let name = input.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "series".into());
    format!("{name}.report.json")
}
