//! Analysis reports built from analyzed series.
//!
//! JSON keeps full precision. Non-finite numbers (the intensity of a
//! zero-byte kernel is `inf`) have no JSON literal and are written as the
//! strings `"inf"`, `"-inf"` and `"nan"`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::machine::MachineSpec;
use crate::roofline::BoundClass;
use crate::sweep::SweepSeries;
use crate::units::sig6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportEntry {
    pub series: String,
    #[serde(with = "lenient_f64")]
    pub param: f64,
    #[serde(with = "lenient_f64")]
    pub ai: f64,
    pub class: String,
    #[serde(with = "lenient_f64")]
    pub measured_sec: f64,
    #[serde(with = "lenient_f64")]
    pub bound_sec: f64,
    #[serde(with = "lenient_f64")]
    pub gap: f64,
    #[serde(with = "lenient_f64")]
    pub attained_flops: f64,
    #[serde(with = "lenient_f64")]
    pub overhead_share: f64,
    #[serde(with = "lenient_f64")]
    pub zero_ai_share: f64,
    pub binding: String,
    pub predicted: bool,
}

impl ReportEntry {
    /// Measured time below the modeled launch overhead.
    pub fn overhead_anomaly(&self) -> bool {
        self.overhead_share > 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisReport {
    pub machine: String,
    pub entries: Vec<ReportEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("series {series:?} was analyzed on machine {series_machine:?}, report is for {machine:?}")]
    MachineMismatch {
        series: String,
        series_machine: String,
        machine: String,
    },
}

/// Names the constraint that sets a kernel's bound.
pub fn binding_constraint(class: BoundClass, compute_ceiling: &str, memory_ceiling: &str) -> String {
    match class {
        BoundClass::OverheadBound => "launch overhead".into(),
        BoundClass::ComputeBound => format!("compute: {compute_ceiling}"),
        BoundClass::BandwidthBound => format!("memory: {memory_ceiling}"),
    }
}

pub fn recommendation(class: BoundClass) -> &'static str {
    match class {
        BoundClass::OverheadBound => {
            "Run time follows the number of kernel launches; fuse kernels or batch more work per launch."
        }
        BoundClass::ComputeBound => "Raise the attained FLOP rate or move to a faster compute pipeline.",
        BoundClass::BandwidthBound => "Cut data movement or improve locality to raise arithmetic intensity.",
    }
}

pub fn build_report(series: &[SweepSeries], machine: &MachineSpec) -> Result<AnalysisReport, ReportError> {
    let mut entries = Vec::new();
    for s in series {
        if s.machine != machine.name {
            return Err(ReportError::MachineMismatch {
                series: s.series_label.clone(),
                series_machine: s.machine.clone(),
                machine: machine.name.clone(),
            });
        }
        for p in &s.points {
            let k = &p.analyzed;
            entries.push(ReportEntry {
                series: s.series_label.clone(),
                param: p.value,
                ai: k.ai,
                class: k.classification.as_str().into(),
                measured_sec: k.measured_time_sec,
                bound_sec: k.bound_runtime_sec,
                gap: k.roofline_gap,
                attained_flops: k.attained_flops_per_sec,
                overhead_share: k.overhead_share(),
                zero_ai_share: p.zero_ai_share,
                binding: binding_constraint(k.classification, &s.compute_ceiling, &s.memory_ceiling),
                predicted: s.kind.is_predicted(),
            });
        }
    }
    entries.sort_by(|a, b| a.series.cmp(&b.series).then(a.param.total_cmp(&b.param)));
    Ok(AnalysisReport {
        machine: machine.name.clone(),
        entries,
    })
}

fn class_from_str(s: &str) -> Option<BoundClass> {
    [
        BoundClass::ComputeBound,
        BoundClass::BandwidthBound,
        BoundClass::OverheadBound,
    ]
    .into_iter()
    .find(|c| c.as_str() == s)
}

/// One table per series, numbers at six significant digits.
pub fn render_markdown(report: &AnalysisReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Roofline report: {}\n", report.machine);
    if report.entries.is_empty() {
        out.push_str("No entries.\n");
        return out;
    }
    let mut start = 0;
    while start < report.entries.len() {
        let series = &report.entries[start].series;
        let end = start
            + report.entries[start..]
                .iter()
                .take_while(|e| &e.series == series)
                .count();
        let group = &report.entries[start..end];
        let kind = if group[0].predicted { "PREDICTED" } else { "MEASURED" };
        let _ = writeln!(out, "## {series} ({kind})\n");
        out.push_str(
            "| param | ai | class | measured_sec | bound_sec | gap | attained_flops | overhead_share | zero_ai_share | binding |\n",
        );
        out.push_str("|---|---|---|---|---|---|---|---|---|---|\n");
        for e in group {
            let flag = if e.overhead_anomaly() {
                " (below modeled overhead)"
            } else {
                ""
            };
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} | {}{} | {} | {} |",
                sig6(e.param),
                sig6(e.ai),
                e.class,
                sig6(e.measured_sec),
                sig6(e.bound_sec),
                sig6(e.gap),
                sig6(e.attained_flops),
                sig6(e.overhead_share),
                flag,
                sig6(e.zero_ai_share),
                e.binding
            );
        }
        out.push('\n');
        let mut bindings: Vec<&str> = Vec::new();
        for e in group {
            if !bindings.contains(&e.binding.as_str()) {
                bindings.push(&e.binding);
            }
        }
        for binding in bindings {
            let class = group
                .iter()
                .find(|e| e.binding == binding)
                .and_then(|e| class_from_str(&e.class));
            if let Some(class) = class {
                let _ = writeln!(out, "- **{binding}**: {}", recommendation(class));
            }
        }
        out.push('\n');
        start = end;
    }
    out
}

/// Serde adapter writing non-finite floats as strings.
pub mod lenient_f64 {
    use super::*;
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    struct LenientVisitor;

    impl Visitor<'_> for LenientVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(LenientVisitor)
    }
}
