//! Report envelope shared by all subcommands.

use std::path::Path;

use anyhow::Context;
use serde::Serialize;

/// Format version of every JSON report; bumped on incompatible changes.
pub const REPORT_VERSION: &str = "1";

/// Everything needed to re-run the command that produced a report.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub subcommand: &'static str,
    pub inputs: Vec<String>,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
}

impl RunManifest {
    pub fn new(subcommand: &'static str, inputs: Vec<String>, seed: Option<u64>, config: impl Serialize) -> anyhow::Result<Self> {
        Ok(RunManifest {
            tool: "tailmix",
            tool_version: env!("CARGO_PKG_VERSION"),
            subcommand,
            inputs,
            seed,
            config: serde_json::to_value(config)?,
        })
    }
}

#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub version: &'static str,
    pub kind: &'static str,
    pub manifest: &'a RunManifest,
    #[serde(flatten)]
    pub body: T,
}

pub fn write_json<T: Serialize>(path: &Path, manifest: &RunManifest, kind: &'static str, body: T) -> anyhow::Result<()> {
    let text = to_json_string(manifest, kind, body)?;
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn to_json_string<T: Serialize>(manifest: &RunManifest, kind: &'static str, body: T) -> anyhow::Result<String> {
    let env = Envelope { version: REPORT_VERSION, kind, manifest, body };
    Ok(serde_json::to_string_pretty(&env)? + "\n")
}

/// Prints a report to stdout; a closed pipe (e.g. `| head`) is not an error.
pub fn print_report(text: &str) -> anyhow::Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

/// Name of an output file relative to the output directory, so reports do
/// not depend on where they were written.
pub fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn display(path: &Path) -> String {
    path.display().to_string()
}
