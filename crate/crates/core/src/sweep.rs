//! One-parameter sweeps assembled into plottable trendline series.
//!
//! Analytical sweeps use the model-predicted runtime ([`bound_runtime`]) as
//! their time; measured sweeps come from profiles whose labels carry the
//! swept parameter as `key=value` pairs, e.g. `framework=pytorch,batch=32`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::cost::{invocation_estimate, CostError, InvocationModel, LayerSpec};
use crate::machine::{Ceilings, MachineSpec};
use crate::profile::{aggregate, zero_ai_share, FlopWeights, KernelAggregate, WorkloadProfile};
use crate::roofline::{analyze, bound_runtime, total_overhead, AnalysisError, AnalyzedKernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    Predicted,
    Measured,
}

impl SeriesKind {
    pub fn is_predicted(&self) -> bool {
        matches!(self, Self::Predicted)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Predicted => "PREDICTED",
            Self::Measured => "MEASURED",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub analyzed: AnalyzedKernel,
    pub zero_ai_share: f64,
}

/// Points of one workload across a single swept parameter, in increasing
/// parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSeries {
    pub series_label: String,
    pub parameter_name: String,
    pub kind: SeriesKind,
    /// Name of the machine the points were analyzed against.
    pub machine: String,
    pub compute_ceiling: String,
    pub memory_ceiling: String,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("sweep has no values")]
    Empty,
    #[error("value {value}: {source}")]
    Layer { value: f64, source: CostError },
    #[error(transparent)]
    Parameter(CostError),
    #[error("duplicate parameter value {param}={value}")]
    DuplicateValue { param: String, value: f64 },
    #[error("profile label {label:?} has no {key:?} entry")]
    MissingKey { label: String, key: String },
    #[error("profile label {label:?}: {key} value {text:?} is not a number")]
    BadValue { label: String, key: String, text: String },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Looks up `key` in a `k1=v1,k2=v2` label.
pub fn label_entry<'a>(label: &'a str, key: &str) -> Option<&'a str> {
    label.split(',').find_map(|pair| {
        let (k, v) = pair.split_once('=')?;
        (k.trim() == key).then(|| v.trim())
    })
}

/// Numeric value of `key` in a profile label.
pub fn label_value(label: &str, key: &str) -> Result<f64, SweepError> {
    let text = label_entry(label, key).ok_or_else(|| SweepError::MissingKey {
        label: label.into(),
        key: key.into(),
    })?;
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| SweepError::BadValue {
            label: label.into(),
            key: key.into(),
            text: text.into(),
        })
}

fn sort_and_check(points: &mut [SweepPoint], param: &str) -> Result<(), SweepError> {
    points.sort_by(|a, b| a.value.total_cmp(&b.value));
    if let Some(w) = points.windows(2).find(|w| w[0].value == w[1].value) {
        return Err(SweepError::DuplicateValue {
            param: param.into(),
            value: w[0].value,
        });
    }
    Ok(())
}

/// Model-predicted series: each value is applied to `template`, and the
/// resulting layer is timed at its roofline bound.
pub fn run_analytical_sweep(
    series_label: impl Into<String>,
    template: &LayerSpec,
    parameter_name: &str,
    values: &[f64],
    machine: &MachineSpec,
    ceilings: Ceilings<'_>,
    invocations: InvocationModel,
) -> Result<SweepSeries, SweepError> {
    if values.is_empty() {
        return Err(SweepError::Empty);
    }
    let series_label = series_label.into();
    // unknown names fail once, not per value
    if let Err(e @ CostError::UnknownParameter { .. }) = template.with_parameter(parameter_name, values[0]) {
        return Err(SweepError::Parameter(e));
    }

    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let layer = template
            .with_parameter(parameter_name, value)
            .map_err(|source| SweepError::Layer { value, source })?;
        let complexity = layer.complexity();
        let launches = invocation_estimate(&layer, invocations);
        let t_overhead = total_overhead(launches, machine);
        let predicted = bound_runtime(complexity, ceilings, t_overhead);
        let agg = KernelAggregate {
            computational_complexity: complexity.cc,
            bandwidth_complexity: complexity.bc,
            total_time_sec: predicted,
            total_invocations: launches,
            zero_ai_bytes: 0.0,
        };
        let label = alloc::format!("{series_label},{parameter_name}={value}");
        points.push(SweepPoint {
            value,
            analyzed: analyze(label, &agg, machine, ceilings)?,
            zero_ai_share: 0.0,
        });
    }
    sort_and_check(&mut points, parameter_name)?;

    Ok(SweepSeries {
        series_label,
        parameter_name: parameter_name.into(),
        kind: SeriesKind::Predicted,
        machine: machine.name.clone(),
        compute_ceiling: ceilings.compute.label.clone(),
        memory_ceiling: ceilings.memory.label.clone(),
        points,
    })
}

/// Measured series from profiles whose labels carry `key=value`.
pub fn build_measured_series(
    series_label: impl Into<String>,
    profiles: &[WorkloadProfile],
    key: &str,
    machine: &MachineSpec,
    ceilings: Ceilings<'_>,
    weights: &FlopWeights,
) -> Result<SweepSeries, SweepError> {
    if profiles.is_empty() {
        return Err(SweepError::Empty);
    }
    let mut points = Vec::with_capacity(profiles.len());
    for profile in profiles {
        let value = label_value(&profile.label, key)?;
        let agg = aggregate(profile, weights);
        points.push(SweepPoint {
            value,
            analyzed: analyze(profile.label.clone(), &agg, machine, ceilings)?,
            zero_ai_share: zero_ai_share(&agg),
        });
    }
    sort_and_check(&mut points, key)?;

    Ok(SweepSeries {
        series_label: series_label.into(),
        parameter_name: key.to_string(),
        kind: SeriesKind::Measured,
        machine: machine.name.clone(),
        compute_ceiling: ceilings.compute.label.clone(),
        memory_ceiling: ceilings.memory.label.clone(),
        points,
    })
}
