//! Kernel profile CSV and its canonical JSON form.
//!
//! The CSV header must be exactly [`PROFILE_HEADER`]. Counts may be written
//! in exponent form (`7.1e9`) as long as they are whole numbers. Time is in
//! nanoseconds and stored in seconds.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use roofkit_core::profile::{KernelRecord, WorkloadProfile};

use crate::error::{Error, Result};
use crate::machine_io::from_json;

pub const PROFILE_HEADER: [&str; 9] = [
    "kernel_name",
    "invocations",
    "time_ns",
    "flops_fp64",
    "flops_fp32",
    "flops_fp16",
    "flops_tensor",
    "bytes_read",
    "bytes_written",
];

const NS_PER_SEC: f64 = 1e9;

fn parse_count(cell: &str, column: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = cell.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = cell
        .parse()
        .map_err(|_| format!("column {column}: {cell:?} is not a number"))?;
    if v < 0.0 {
        return Err(format!("column {column}: negative value {cell}"));
    }
    if !v.is_finite() || v.fract() != 0.0 || v > u64::MAX as f64 {
        return Err(format!("column {column}: {cell:?} is not a whole count"));
    }
    Ok(v as u64)
}

fn parse_time_ns(cell: &str) -> std::result::Result<f64, String> {
    let v: f64 = cell
        .parse()
        .map_err(|_| format!("column time_ns: {cell:?} is not a number"))?;
    if v < 0.0 {
        return Err(format!("column time_ns: negative value {cell}"));
    }
    if !v.is_finite() {
        return Err(format!("column time_ns: {cell:?} is not finite"));
    }
    Ok(v / NS_PER_SEC)
}

fn check_header(header: &csv::StringRecord) -> std::result::Result<(), String> {
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err("empty file, expected a header row".into());
    }
    for name in PROFILE_HEADER {
        if !header.iter().any(|h| h == name) {
            return Err(format!("missing column {name:?}"));
        }
    }
    if !header.iter().eq(PROFILE_HEADER) {
        return Err(format!(
            "header must be exactly {:?}, got {:?}",
            PROFILE_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        ));
    }
    Ok(())
}

/// Parses one profile. `origin` names the source in error messages.
pub fn parse_profile_csv(source: impl Read, label: &str, origin: &str) -> Result<WorkloadProfile> {
    let csv_err = |line: u64, message: String| Error::Csv {
        origin: origin.into(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let header = reader.headers().map_err(|e| csv_err(1, e.to_string()))?.clone();
    check_header(&header).map_err(|m| csv_err(1, m))?;

    let mut kernels = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let count = |i: usize| parse_count(&row[i], PROFILE_HEADER[i]).map_err(|m| csv_err(line, m));
        let invocations = count(1)?;
        if invocations == 0 {
            return Err(csv_err(line, "column invocations: must be at least 1".into()));
        }
        kernels.push(KernelRecord {
            kernel_name: row[0].to_string(),
            invocations,
            total_time_sec: parse_time_ns(&row[2]).map_err(|m| csv_err(line, m))?,
            flops_fp64: count(3)?,
            flops_fp32: count(4)?,
            flops_fp16: count(5)?,
            flops_tensor: count(6)?,
            bytes_read: count(7)?,
            bytes_written: count(8)?,
        });
    }
    Ok(WorkloadProfile::new(label, kernels))
}

/// Profile label for a file: its stem, e.g. `batch=16` for `batch=16.csv`.
pub fn label_for_path(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn load_profile_csv(path: &Path) -> Result<WorkloadProfile> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_profile_csv(file, &label_for_path(path), &path.display().to_string())
}

/// Expands directories to their `.csv` files in name order.
pub fn expand_profile_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(path)
                .map_err(|e| Error::io(path, e))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
                .collect();
            if found.is_empty() {
                return Err(Error::Input(format!(
                    "{}: no .csv profiles in directory",
                    path.display()
                )));
            }
            found.sort();
            out.extend(found);
        } else {
            out.push(path.clone());
        }
    }
    Ok(out)
}

pub fn write_profile_csv(profile: &WorkloadProfile) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(PROFILE_HEADER).expect("in-memory write");
    for k in &profile.kernels {
        writer
            .write_record([
                k.kernel_name.clone(),
                k.invocations.to_string(),
                (k.total_time_sec * NS_PER_SEC).to_string(),
                k.flops_fp64.to_string(),
                k.flops_fp32.to_string(),
                k.flops_fp16.to_string(),
                k.flops_tensor.to_string(),
                k.bytes_read.to_string(),
                k.bytes_written.to_string(),
            ])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn profile_to_json(profile: &WorkloadProfile) -> String {
    let mut out = serde_json::to_string_pretty(profile).expect("profile serializes");
    out.push('\n');
    out
}

pub fn profile_from_json(text: &str, origin: &str) -> Result<WorkloadProfile> {
    from_json(text, origin)
}
