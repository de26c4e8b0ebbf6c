use std::fs::File;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Args;
use serde::Serialize;
use tailmix::ingest::{bin_series_with_stats, parse_flows, parse_uptime, write_series, BinStats};
use tailmix::STANDARD_WINDOWS;

use crate::report::{display, file_name, write_json, RunManifest};

#[derive(Args, Debug)]
pub struct BinArgs {
    /// Flow file with a header row and a `start_time` column (seconds).
    #[arg(long)]
    input: PathBuf,
    /// Window sizes in seconds.
    #[arg(long, value_delimiter = ',', default_values_t = STANDARD_WINDOWS)]
    windows: Vec<u32>,
    /// Drop bins with no flow starts (`--drop-zeros false` keeps them).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    drop_zeros: bool,
    /// File of `start,end` intervals during which the monitor was up.
    #[arg(long)]
    uptime: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Serialize)]
struct Config<'a> {
    windows: &'a [u32],
    drop_zeros: bool,
}

#[derive(Serialize)]
struct WindowSummary {
    bin_seconds: u32,
    n: usize,
    #[serde(flatten)]
    stats: BinStats,
    output: String,
}

#[derive(Serialize)]
struct BinReport<'a> {
    input: String,
    records: usize,
    windows: &'a [WindowSummary],
}

pub fn run(args: BinArgs) -> anyhow::Result<()> {
    if args.windows.is_empty() || args.windows.contains(&0) {
        bail!("window sizes must be positive integers");
    }
    let file = File::open(&args.input).with_context(|| format!("cannot open {}", args.input.display()))?;
    let records = parse_flows(file).with_context(|| format!("in {}", args.input.display()))?;
    if records.is_empty() {
        bail!("{} contains no flow records", args.input.display());
    }
    let uptime = match &args.uptime {
        Some(p) => {
            let f = File::open(p).with_context(|| format!("cannot open {}", p.display()))?;
            Some(parse_uptime(f).with_context(|| format!("in {}", p.display()))?)
        }
        None => None,
    };
    crate::ensure_dir(&args.out_dir)?;
    let stem = args.input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "flows".into());

    let mut summaries = Vec::new();
    for &w in &args.windows {
        let (mut series, stats) = bin_series_with_stats(&records, w as f64, uptime.as_ref(), args.drop_zeros)?;
        series.source_id = stem.clone();
        let path = args.out_dir.join(format!("{stem}.w{w}.series"));
        let out = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        let mut out = std::io::BufWriter::new(out);
        write_series(&mut out, &series)?;
        std::io::Write::flush(&mut out)?;
        println!(
            "{w:>5}s: n = {:>7}  (bins {}, dropped: {} zero, {} outside uptime) -> {}",
            series.n(),
            stats.total_bins,
            stats.dropped_zero,
            stats.dropped_uptime,
            path.display()
        );
        summaries.push(WindowSummary { bin_seconds: w, n: series.n(), stats, output: file_name(&path) });
    }

    let mut inputs = vec![display(&args.input)];
    inputs.extend(args.uptime.as_deref().map(display));
    let manifest = RunManifest::new("bin", inputs, None, Config { windows: &args.windows, drop_zeros: args.drop_zeros })?;
    let body = BinReport { input: display(&args.input), records: records.len(), windows: &summaries };
    write_json(&args.out_dir.join(format!("{stem}.bin-report.json")), &manifest, "bin", body)
}
