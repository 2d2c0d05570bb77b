#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn arg(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

/// Runs the CLI in-process.
pub fn roofkit(args: &[String]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("roofkit".to_string()).chain(args.iter().cloned());
    let code = roofkit::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Runs the built binary.
pub fn roofkit_bin(args: &[String]) -> (i32, String, String) {
    let output = Command::new(env!("CARGO_BIN_EXE_roofkit"))
        .args(args)
        .env_remove("NO_COLOR")
        .output()
        .expect("binary runs");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8(output.stdout).unwrap(),
        String::from_utf8(output.stderr).unwrap(),
    )
}

/// Compares against a stored golden; `UPDATE_GOLDENS=1` rewrites it.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDENS").is_some() {
        fs::write(&path, actual).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        return Ok(());
    }
    let line = expected
        .lines()
        .zip(actual.lines())
        .position(|(a, b)| a != b)
        .unwrap_or_else(|| expected.lines().count().min(actual.lines().count()));
    Err(format!("{name} differs from golden at line {}", line + 1))
}

pub fn v100() -> PathBuf {
    fixture("machines/v100.json")
}

pub fn analyze_args(profile: &Path, report: &Path, svg: &Path, chart: &str) -> Vec<String> {
    vec![
        "analyze".into(),
        "--profile".into(),
        arg(profile),
        "--machine".into(),
        arg(&v100()),
        "--ceiling".into(),
        "tensor_core".into(),
        "--report".into(),
        arg(report),
        "--svg".into(),
        arg(svg),
        "--chart".into(),
        chart.into(),
    ]
}

pub fn plot_lstm_args(svg: &Path) -> Vec<String> {
    let mut args: Vec<String> = ["plot", "--machine"].map(String::from).to_vec();
    args.push(arg(&v100()));
    args.extend(["--chart", "4d", "--svg"].map(String::from));
    args.push(arg(svg));
    for fw in ["pytorch", "tf1", "tf2"] {
        args.push("--measured".into());
        args.push(format!("{fw}={}", arg(&fixture(&format!("lstm/{fw}")))));
    }
    args.push("--sweep".into());
    args.push(arg(&fixture("sweeps/lstm_pytorch_batch.json")));
    args.extend(["--title", "LSTM batch sweep on V100"].map(String::from));
    args
}
