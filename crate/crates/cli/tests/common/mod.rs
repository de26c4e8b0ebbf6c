#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn tailmix() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tailmix"));
    cmd.env_remove("TAILMIX_SEED");
    cmd
}

/// Runs the binary from `dir` and returns its output; panics with stderr when
/// `expect_success` does not match the exit status.
pub fn run_in(dir: &Path, args: &[&str], expect_success: bool) -> Output {
    let out = tailmix().current_dir(dir).args(args).output().expect("spawn tailmix");
    assert_eq!(
        out.status.success(),
        expect_success,
        "tailmix {args:?}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// All files below `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

pub fn schema_validator() -> jsonschema::Validator {
    let text = include_str!("../../../../docs/report.schema.json");
    let schema: serde_json::Value = serde_json::from_str(text).unwrap();
    jsonschema::validator_for(&schema).expect("schema compiles")
}

pub fn assert_valid(validator: &jsonschema::Validator, path: &Path) {
    let value = read_json(path);
    let errors: Vec<String> = validator.iter_errors(&value).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{} does not match the report schema:\n{}", path.display(), errors.join("\n"));
}

/// Flow file with three bursts of activity, one flow per line.
pub fn sample_flows() -> String {
    let mut s = String::from("start_time,proto,sport,dport\n");
    let mut t = 0.0f64;
    let mut state = 12345u64;
    for _ in 0..3000 {
        // xorshift for a cheap deterministic spread of gaps
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        let u = (state >> 11) as f64 / (1u64 << 53) as f64;
        t += if u < 0.9 { u * 2.0 } else { u * 200.0 };
        s.push_str(&format!("{t:.3},6,{},{}\n", 40000 + state % 1000, 443));
    }
    s
}

pub const EP_MODEL: &str = r#"{"kind": "EP", "alpha": 1.6, "weights": [0.5, 0.5], "lambdas": [0.2]}"#;
pub const P_MODEL: &str = r#"{"kind": "P", "alpha": 1.8, "weights": [1.0]}"#;
