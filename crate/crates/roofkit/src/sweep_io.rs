//! Sweep config JSON.
//!
//! ```json
//! {"layer": "lstm", "template": {"batch": 16, "seq_len": 16, "input_features": 32,
//!  "hidden": 16, "elem_bytes": 4}, "parameter": "batch", "values": [16, 32, 64, 128],
//!  "kernels_per_step": 2, "epilogue_invocations": 4}
//! ```
//!
//! An optional `"label"` names the series; it defaults to `<layer>:<parameter>`.

use std::fs;
use std::path::Path;

use roofkit_core::cost::{Conv2DSpec, InvocationModel, LayerSpec, LstmSpec};
use roofkit_core::machine::{Ceilings, MachineSpec};
use roofkit_core::sweep::{run_analytical_sweep, SweepSeries};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::machine_io::from_json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv2d,
    Lstm,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    label: Option<String>,
    layer: LayerKind,
    template: serde_json::Value,
    parameter: String,
    values: Vec<f64>,
    kernels_per_step: u64,
    #[serde(default)]
    epilogue_invocations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub label: String,
    pub template: LayerSpec,
    pub parameter: String,
    pub values: Vec<f64>,
    pub invocations: InvocationModel,
}

impl SweepConfig {
    pub fn run(&self, machine: &MachineSpec, ceilings: Ceilings<'_>) -> Result<SweepSeries> {
        Ok(run_analytical_sweep(
            self.label.clone(),
            &self.template,
            &self.parameter,
            &self.values,
            machine,
            ceilings,
            self.invocations,
        )?)
    }
}

pub fn parse_sweep_config(text: &str, origin: &str) -> Result<SweepConfig> {
    let raw: RawConfig = from_json(text, origin)?;
    let template_text = raw.template.to_string();
    let template_err = |e: Error| match e {
        Error::Json {
            origin,
            key_path,
            message,
        } => Error::Json {
            origin,
            key_path: format!("template.{key_path}"),
            message,
        },
        other => other,
    };
    let template = match raw.layer {
        LayerKind::Conv2d => LayerSpec::Conv2D(from_json::<Conv2DSpec>(&template_text, origin).map_err(template_err)?),
        LayerKind::Lstm => LayerSpec::Lstm(from_json::<LstmSpec>(&template_text, origin).map_err(template_err)?),
    };
    template.validate()?;
    let layer_name = template.kind();
    Ok(SweepConfig {
        label: raw.label.unwrap_or_else(|| format!("{layer_name}:{}", raw.parameter)),
        template,
        parameter: raw.parameter,
        values: raw.values,
        invocations: InvocationModel::new(raw.kernels_per_step, raw.epilogue_invocations),
    })
}

pub fn load_sweep_config(path: &Path) -> Result<SweepConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sweep_config(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use roofkit_core::machine::{ComputeCeiling, MemoryCeiling};

    const LSTM: &str = r#"{"layer": "lstm", "label": "pytorch",
        "template": {"batch": 16, "seq_len": 16, "input_features": 32, "hidden": 16, "elem_bytes": 4},
        "parameter": "seq_len", "values": [16, 32, 64, 128],
        "kernels_per_step": 2, "epilogue_invocations": 4}"#;

    #[test]
    fn runs_lstm_config() {
        let m = MachineSpec::new(
            "V100",
            vec![ComputeCeiling::new("tensor_core", 1.07479e14)],
            vec![MemoryCeiling::new("hbm", 8.288e11)],
            4.2e-6,
        )
        .unwrap();
        let cfg = parse_sweep_config(LSTM, "c.json").unwrap();
        assert_eq!(cfg.label, "pytorch");
        let s = cfg.run(&m, m.default_ceilings().unwrap()).unwrap();
        let inv: Vec<u64> = s.points.iter().map(|p| p.analyzed.invocations).collect();
        assert_eq!(inv, vec![36, 68, 132, 260]);
    }

    #[test]
    fn template_errors_are_prefixed() {
        let bad = LSTM.replace("\"hidden\": 16", "\"hidden\": -1");
        let err = parse_sweep_config(&bad, "c.json").unwrap_err().to_string();
        assert!(err.contains("template.hidden"), "{err}");
        let unknown = LSTM.replace("\"hidden\": 16", "\"hidden\": 16, \"heads\": 2");
        let err = parse_sweep_config(&unknown, "c.json").unwrap_err().to_string();
        assert!(err.contains("heads"), "{err}");
        let layer = LSTM.replace("\"lstm\"", "\"gru\"");
        let err = parse_sweep_config(&layer, "c.json").unwrap_err().to_string();
        assert!(err.contains("layer"), "{err}");
    }

    #[test]
    fn default_label_and_epilogue() {
        let text = r#"{"layer": "conv2d",
            "template": {"n": 16, "h": 32, "w": 32, "c_in": 3, "k_h": 3, "k_w": 3, "c_out": 64, "elem_bytes": 2},
            "parameter": "batch", "values": [16, 32], "kernels_per_step": 3}"#;
        let cfg = parse_sweep_config(text, "c.json").unwrap();
        assert_eq!(cfg.label, "conv2d:batch");
        assert_eq!(cfg.invocations, InvocationModel::new(3, 0));
    }
}
