//! Canonical per-kernel workload model and its aggregation into
//! computational / bandwidth complexity totals.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Profiler totals for one kernel (summed over all of its invocations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelRecord {
    pub kernel_name: String,
    pub invocations: u64,
    pub total_time_sec: f64,
    pub flops_fp64: u64,
    pub flops_fp32: u64,
    pub flops_fp16: u64,
    pub flops_tensor: u64,
    pub bytes_read: u64,
    pub bytes_written: u64,
}

impl KernelRecord {
    /// FLOPs across all pipelines, unweighted.
    pub fn total_flops(&self) -> u128 {
        u128::from(self.flops_fp64)
            + u128::from(self.flops_fp32)
            + u128::from(self.flops_fp16)
            + u128::from(self.flops_tensor)
    }

    pub fn total_bytes(&self) -> u128 {
        u128::from(self.bytes_read) + u128::from(self.bytes_written)
    }

    pub fn time_per_invocation_sec(&self) -> f64 {
        self.total_time_sec / self.invocations.max(1) as f64
    }

    pub fn flops_per_invocation(&self) -> f64 {
        self.total_flops() as f64 / self.invocations.max(1) as f64
    }

    pub fn bytes_per_invocation(&self) -> f64 {
        self.total_bytes() as f64 / self.invocations.max(1) as f64
    }
}

/// A labelled set of kernel records, e.g. one framework/precision/pass at one
/// parameter value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadProfile {
    pub label: String,
    pub kernels: Vec<KernelRecord>,
}

impl WorkloadProfile {
    pub fn new(label: impl Into<String>, kernels: Vec<KernelRecord>) -> Self {
        Self {
            label: label.into(),
            kernels,
        }
    }
}

/// Per-pipeline FLOP weights. All ones treats precisions equally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlopWeights {
    pub fp64: f64,
    pub fp32: f64,
    pub fp16: f64,
    pub tensor: f64,
}

impl FlopWeights {
    pub const PRECISION_AGNOSTIC: Self = Self {
        fp64: 1.0,
        fp32: 1.0,
        fp16: 1.0,
        tensor: 1.0,
    };
}

impl Default for FlopWeights {
    fn default() -> Self {
        Self::PRECISION_AGNOSTIC
    }
}

/// Workload totals.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KernelAggregate {
    /// Computational complexity, FLOPs.
    pub computational_complexity: f64,
    /// Bandwidth complexity, bytes.
    pub bandwidth_complexity: f64,
    pub total_time_sec: f64,
    pub total_invocations: u64,
    /// Bytes moved by kernels that perform no floating-point work.
    pub zero_ai_bytes: f64,
}

/// Sums a profile into complexity and time totals.
///
/// Integer counters are summed exactly per pipeline before weighting, and
/// times are summed in sorted order, so the result does not depend on the
/// order of the kernel list.
pub fn aggregate(p: &WorkloadProfile, weights: &FlopWeights) -> KernelAggregate {
    let mut fp64 = 0u128;
    let mut fp32 = 0u128;
    let mut fp16 = 0u128;
    let mut tensor = 0u128;
    let mut bytes = 0u128;
    let mut zero_ai = 0u128;
    let mut invocations = 0u64;
    let mut times = Vec::with_capacity(p.kernels.len());

    for k in &p.kernels {
        fp64 += u128::from(k.flops_fp64);
        fp32 += u128::from(k.flops_fp32);
        fp16 += u128::from(k.flops_fp16);
        tensor += u128::from(k.flops_tensor);
        bytes += k.total_bytes();
        if k.total_flops() == 0 {
            zero_ai += k.total_bytes();
        }
        invocations = invocations.saturating_add(k.invocations);
        times.push(k.total_time_sec);
    }
    times.sort_by(f64::total_cmp);

    KernelAggregate {
        computational_complexity: weights.fp64 * fp64 as f64
            + weights.fp32 * fp32 as f64
            + weights.fp16 * fp16 as f64
            + weights.tensor * tensor as f64,
        bandwidth_complexity: bytes as f64,
        total_time_sec: times.iter().sum(),
        total_invocations: invocations,
        zero_ai_bytes: zero_ai as f64,
    }
}

/// Fraction of bandwidth complexity spent in zero-FLOP kernels; 0 when
/// nothing moves.
pub fn zero_ai_share(agg: &KernelAggregate) -> f64 {
    if agg.bandwidth_complexity > 0.0 {
        agg.zero_ai_bytes / agg.bandwidth_complexity
    } else {
        0.0
    }
}
