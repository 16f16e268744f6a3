use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use crate::Outcome;

fn invoke(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_signalsim"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} exited with {}: {}", out.status, String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

/// Every regular file under `dir`, by name.
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

/// Runs `args` twice, each time into a fresh directory substituted for
/// `{dir}`, and compares stdout and every written file.
fn twice_identical(args: &[&str]) -> Result<(), String> {
    let mut results = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let d = dir.path().to_str().unwrap().to_string();
        let args: Vec<String> = args.iter().map(|a| a.replace("{dir}", &d)).collect();
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let stdout = invoke(&argv)?;
        let files = snapshot(dir.path());
        let stdout = String::from_utf8_lossy(&stdout).replace(&d, "{dir}");
        results.push((stdout, files));
    }
    if results[0] != results[1] {
        return Err(format!("{args:?} produced different outputs"));
    }
    if results[0].1.is_empty() && args.iter().any(|a| a.contains("{dir}")) {
        return Err(format!("{args:?} wrote no files"));
    }
    Ok(())
}

pub fn criterion_8() -> Outcome {
    let start = Instant::now();
    let cases: &[&[&str]] = &[
        &["run", "--instance", "diamond", "--scheme", "now", "--horizon", "60", "--seed", "3", "--out", "{dir}/a.csv"],
        &["run", "--instance", "diamond", "--scheme", "extreme", "--r", "20", "--horizon", "200", "--seed", "1", "--out", "{dir}/a.csv"],
        &["run", "--instance", "diamond", "--scheme", "subinterval", "--r", "5", "--alpha", "0.3", "--horizon", "60", "--uncapped", "--out", "{dir}/a.csv"],
        &["run", "--instance", "diamond", "--scheme", "full-extreme", "--horizon", "60", "--types", "3", "--eps", "0.2", "--out", "{dir}/a.csv"],
        &["run", "--instance", "sioux-falls", "--scheme", "mean", "--horizon", "5", "--seed", "9", "--out", "{dir}/a.csv"],
        &["sweep", "--instance", "diamond", "--horizon", "80", "--seed", "2", "--out-dir", "{dir}"],
        &["flapping-demo", "--J", "7", "--N", "3", "--out", "{dir}/f.csv"],
        &["convergence-check", "--N", "20", "--M", "2", "--trajectories", "50", "--horizon", "40", "--seed", "4", "--out", "{dir}/c.csv"],
        &["gen-diamond", "--dir", "{dir}"],
        &["sue-oracle"],
    ];
    let mut failures = Vec::new();
    for args in cases {
        if let Err(e) = twice_identical(args) {
            failures.push(e);
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!(
                "{} subcommand invocations repeated with identical bytes; runtime {:.2}s",
                cases.len(),
                start.elapsed().as_secs_f64()
            )
        } else {
            failures.join("; ")
        },
    }
}
