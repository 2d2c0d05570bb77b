//! Roofline bounds with a launch-overhead ceiling, the complexity plane, the
//! compute/bandwidth time plane, and kernel classification.
//!
//! Conventions:
//! - arithmetic intensity is `cc / bc`, `+inf` for zero-byte work with
//!   FLOPs, and `0` for zero-FLOP work (including `0 / 0`);
//! - `ai == machine balance` counts as compute-bound;
//! - overhead comparisons are inclusive (`<=`).

use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::machine::{Ceilings, MachineSpec};
use crate::profile::KernelAggregate;

/// Relative slack used when comparing the open symbol against the closed one.
pub const ANOMALY_REL_TOL: f64 = 1e-9;

/// A workload's position in the computational/bandwidth complexity plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComplexityPoint {
    /// FLOPs.
    pub cc: f64,
    /// Bytes.
    pub bc: f64,
}

impl ComplexityPoint {
    pub fn new(cc: f64, bc: f64) -> Self {
        Self { cc, bc }
    }
}

/// A workload's position in the compute/bandwidth time plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TimePoint {
    pub compute_time_sec: f64,
    pub bandwidth_time_sec: f64,
}

impl TimePoint {
    /// Runtime under perfect overlap of compute and data movement.
    pub fn runtime(&self) -> f64 {
        self.compute_time_sec.max(self.bandwidth_time_sec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundClass {
    ComputeBound,
    BandwidthBound,
    OverheadBound,
}

impl BoundClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ComputeBound => "ComputeBound",
            Self::BandwidthBound => "BandwidthBound",
            Self::OverheadBound => "OverheadBound",
        }
    }
}

impl fmt::Display for BoundClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// FLOPs per byte.
pub fn arithmetic_intensity(c: ComplexityPoint) -> f64 {
    if c.cc == 0.0 {
        0.0
    } else if c.bc == 0.0 {
        f64::INFINITY
    } else {
        c.cc / c.bc
    }
}

/// Total launch latency for `invocations` kernel launches, in seconds.
pub fn total_overhead(invocations: u64, machine: &MachineSpec) -> f64 {
    invocations as f64 * machine.launch_overhead_sec
}

/// Attainable FLOP/s: the minimum of the compute ceiling, the bandwidth
/// diagonal and the overhead ceiling `cc / t_overhead`.
pub fn roofline_bound_flops(ai: f64, ceilings: Ceilings<'_>, cc: f64, t_overhead: f64) -> f64 {
    let overhead_ceiling = overhead_ceiling_flops(cc, t_overhead);
    ceilings
        .peak_flops()
        .min(ceilings.peak_bandwidth() * ai)
        .min(overhead_ceiling)
}

/// `cc / t_overhead`, infinite without overhead.
pub fn overhead_ceiling_flops(cc: f64, t_overhead: f64) -> f64 {
    if t_overhead > 0.0 {
        cc / t_overhead
    } else {
        f64::INFINITY
    }
}

/// Computational complexity at which the overhead ceiling meets the compute
/// ceiling: below it, launch latency alone bounds performance.
pub fn overhead_escape_complexity(peak_flops: f64, t_overhead: f64) -> f64 {
    peak_flops * t_overhead
}

/// Minimum runtime the model permits: `max(cc / peak, bc / bw, t_overhead)`.
pub fn bound_runtime(c: ComplexityPoint, ceilings: Ceilings<'_>, t_overhead: f64) -> f64 {
    (c.cc / ceilings.peak_flops())
        .max(c.bc / ceilings.peak_bandwidth())
        .max(t_overhead)
}

/// Remaps a measured runtime into compute and bandwidth time.
///
/// The dominant resource is charged the full runtime; the other is scaled
/// down by the ratio of `ai` to machine balance `mb`. Thus
/// `max(ct, bt) == measured_time` and `ct / bt == ai / mb`.
pub fn time_coordinates(measured_time: f64, ai: f64, mb: f64) -> TimePoint {
    if ai >= mb {
        TimePoint {
            compute_time_sec: measured_time,
            bandwidth_time_sec: if ai.is_infinite() {
                0.0
            } else {
                measured_time * (mb / ai)
            },
        }
    } else {
        TimePoint {
            compute_time_sec: measured_time * (ai / mb),
            bandwidth_time_sec: measured_time,
        }
    }
}

pub fn classify(time: TimePoint, t_overhead: f64) -> BoundClass {
    if time.compute_time_sec <= t_overhead && time.bandwidth_time_sec <= t_overhead {
        BoundClass::OverheadBound
    } else if time.bandwidth_time_sec > time.compute_time_sec {
        BoundClass::BandwidthBound
    } else {
        BoundClass::ComputeBound
    }
}

/// Region of the complexity plane: inside the overhead box, or on either
/// side of the machine-balance diagonal.
pub fn complexity_plane_region(c: ComplexityPoint, ceilings: Ceilings<'_>, t_overhead: f64) -> BoundClass {
    if c.cc <= ceilings.peak_flops() * t_overhead && c.bc <= ceilings.peak_bandwidth() * t_overhead {
        BoundClass::OverheadBound
    } else if arithmetic_intensity(c) >= ceilings.machine_balance() {
        BoundClass::ComputeBound
    } else {
        BoundClass::BandwidthBound
    }
}

/// A workload placed in every view of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzedKernel {
    pub label: String,
    pub complexity: ComplexityPoint,
    pub measured_time_sec: f64,
    pub invocations: u64,
    pub ai: f64,
    pub machine_balance: f64,
    pub classification: BoundClass,
    pub time: TimePoint,
    pub bound_runtime_sec: f64,
    pub roofline_gap: f64,
    pub attained_flops_per_sec: f64,
    pub overhead_sec: f64,
    pub peak_flops: f64,
    pub peak_bandwidth: f64,
    /// The time-derived symbol lies below the complexity symbol, i.e. the
    /// measurement beats the roofline (typically cache effects).
    pub measurement_anomaly: bool,
}

impl AnalyzedKernel {
    /// Closed symbol of the combined chart.
    pub fn closed_symbol(&self) -> ComplexityPoint {
        self.complexity
    }

    /// Open symbol: compute and bandwidth time rescaled by the peaks.
    pub fn open_symbol(&self) -> ComplexityPoint {
        open_symbol(self.time, self.peak_flops, self.peak_bandwidth)
    }

    pub fn overhead_share(&self) -> f64 {
        self.overhead_sec / self.measured_time_sec
    }

    /// Attainable FLOP/s at this kernel's intensity.
    pub fn roofline_bound_flops(&self) -> f64 {
        self.peak_flops
            .min(self.peak_bandwidth * self.ai)
            .min(overhead_ceiling_flops(self.complexity.cc, self.overhead_sec))
    }
}

pub fn open_symbol(time: TimePoint, peak_flops: f64, peak_bandwidth: f64) -> ComplexityPoint {
    ComplexityPoint {
        cc: time.compute_time_sec * peak_flops,
        bc: time.bandwidth_time_sec * peak_bandwidth,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("{label}: measured time must be a finite positive number of seconds, got {time}")]
    NonPositiveTime { label: String, time: f64 },
    #[error("{label}: complexity must be finite and non-negative, got cc={cc} bc={bc}")]
    InvalidComplexity { label: String, cc: f64, bc: f64 },
}

/// Runs every view of the model over one aggregate.
pub fn analyze(
    label: impl Into<String>,
    agg: &KernelAggregate,
    machine: &MachineSpec,
    ceilings: Ceilings<'_>,
) -> Result<AnalyzedKernel, AnalysisError> {
    let label = label.into();
    let measured = agg.total_time_sec;
    if !(measured.is_finite() && measured > 0.0) {
        return Err(AnalysisError::NonPositiveTime { label, time: measured });
    }
    let complexity = ComplexityPoint::new(agg.computational_complexity, agg.bandwidth_complexity);
    let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
    if !(finite_nonneg(complexity.cc) && finite_nonneg(complexity.bc)) {
        return Err(AnalysisError::InvalidComplexity {
            label,
            cc: complexity.cc,
            bc: complexity.bc,
        });
    }

    let ai = arithmetic_intensity(complexity);
    let mb = ceilings.machine_balance();
    let overhead_sec = total_overhead(agg.total_invocations, machine);
    let time = time_coordinates(measured, ai, mb);
    let classification = classify(time, overhead_sec);
    let bound_runtime_sec = bound_runtime(complexity, ceilings, overhead_sec);
    let open = open_symbol(time, ceilings.peak_flops(), ceilings.peak_bandwidth());
    let below = |open: f64, closed: f64| open < closed * (1.0 - ANOMALY_REL_TOL);
    let measurement_anomaly = below(open.cc, complexity.cc) || below(open.bc, complexity.bc);

    Ok(AnalyzedKernel {
        label,
        complexity,
        measured_time_sec: measured,
        invocations: agg.total_invocations,
        ai,
        machine_balance: mb,
        classification,
        time,
        bound_runtime_sec,
        roofline_gap: measured / bound_runtime_sec,
        attained_flops_per_sec: complexity.cc / measured,
        overhead_sec,
        peak_flops: ceilings.peak_flops(),
        peak_bandwidth: ceilings.peak_bandwidth(),
        measurement_anomaly,
    })
}
