//! Machine spec JSON files.

use std::fs;
use std::path::Path;

use roofkit_core::machine::{ComputeCeiling, MachineSpec, MemoryCeiling};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMachine {
    name: String,
    compute_ceilings: Vec<ComputeCeiling>,
    memory_ceilings: Vec<MemoryCeiling>,
    #[serde(default)]
    launch_overhead_sec: Option<f64>,
}

/// A validated spec plus anything worth telling the user about it.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedMachine {
    pub spec: MachineSpec,
    /// Set when the file had no `launch_overhead_sec` and 0 was assumed.
    pub overhead_defaulted: bool,
    pub warnings: Vec<String>,
}

/// Deserializes JSON and reports failures with the offending key path.
pub(crate) fn from_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let key_path = match e.path().to_string() {
            p if p == "." => "<root>".to_string(),
            p => p,
        };
        Error::Json {
            origin: origin.into(),
            key_path,
            message: e.into_inner().to_string(),
        }
    })
}

pub fn parse_machine_spec(text: &str, origin: &str) -> Result<LoadedMachine> {
    let raw: RawMachine = from_json(text, origin)?;
    let overhead_defaulted = raw.launch_overhead_sec.is_none();
    let spec = MachineSpec::new(
        raw.name,
        raw.compute_ceilings,
        raw.memory_ceilings,
        raw.launch_overhead_sec.unwrap_or(0.0),
    )
    .map_err(|source| Error::Spec {
        origin: origin.into(),
        source,
    })?;
    let mut warnings = Vec::new();
    if overhead_defaulted {
        warnings.push(format!(
            "{origin}: launch_overhead_sec missing, assuming 0 (no overhead ceiling)"
        ));
    }
    Ok(LoadedMachine {
        spec,
        overhead_defaulted,
        warnings,
    })
}

pub fn load_machine_spec(path: &Path) -> Result<LoadedMachine> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_machine_spec(&text, &path.display().to_string())
}

pub fn machine_spec_to_json(spec: &MachineSpec) -> String {
    let mut out = serde_json::to_string_pretty(spec).expect("machine spec serializes");
    out.push('\n');
    out
}
