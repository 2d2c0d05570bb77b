//! Machine characterization: compute ceilings, memory ceilings and launch
//! overhead.
//!
//! All quantities are stored in base SI units (FLOP/s, B/s, s). Prefixed
//! display is handled by [`crate::units`].

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Peak floating-point throughput of one execution pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComputeCeiling {
    pub label: String,
    pub flops_per_sec: f64,
}

/// Peak bandwidth of one level of the memory hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryCeiling {
    pub label: String,
    pub bytes_per_sec: f64,
}

impl ComputeCeiling {
    pub fn new(label: impl Into<String>, flops_per_sec: f64) -> Self {
        Self {
            label: label.into(),
            flops_per_sec,
        }
    }
}

impl MemoryCeiling {
    pub fn new(label: impl Into<String>, bytes_per_sec: f64) -> Self {
        Self {
            label: label.into(),
            bytes_per_sec,
        }
    }
}

/// Violated machine invariant, with the JSON key path of the offending value.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path}: {kind}")]
pub struct SpecError {
    pub path: String,
    pub kind: SpecErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecErrorKind {
    #[error("must be a finite number greater than zero, got {0}")]
    NotPositive(f64),
    #[error("must be a finite number greater than or equal to zero, got {0}")]
    Negative(f64),
    #[error("label must not be empty")]
    EmptyLabel,
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("at least one ceiling is required")]
    NoCeilings,
    #[error("no ceiling labelled {0:?}")]
    UnknownCeiling(String),
}

impl SpecError {
    fn at(path: impl Into<String>, kind: SpecErrorKind) -> Self {
        Self {
            path: path.into(),
            kind,
        }
    }
}

/// A characterized machine. Immutable once validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineSpec {
    pub name: String,
    pub compute_ceilings: Vec<ComputeCeiling>,
    pub memory_ceilings: Vec<MemoryCeiling>,
    /// Seconds per kernel launch.
    pub launch_overhead_sec: f64,
}

impl MachineSpec {
    /// Builds a spec and checks every invariant.
    pub fn new(
        name: impl Into<String>,
        compute_ceilings: Vec<ComputeCeiling>,
        memory_ceilings: Vec<MemoryCeiling>,
        launch_overhead_sec: f64,
    ) -> Result<Self, SpecError> {
        let spec = Self {
            name: name.into(),
            compute_ceilings,
            memory_ceilings,
            launch_overhead_sec,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the invariants, reporting the first violation in file order.
    pub fn validate(&self) -> Result<(), SpecError> {
        if self.compute_ceilings.is_empty() {
            return Err(SpecError::at("compute_ceilings", SpecErrorKind::NoCeilings));
        }
        let mut seen = BTreeSet::new();
        for (i, c) in self.compute_ceilings.iter().enumerate() {
            check_label(&c.label, &mut seen, || format!("compute_ceilings[{i}].label"))?;
            if !(c.flops_per_sec.is_finite() && c.flops_per_sec > 0.0) {
                return Err(SpecError::at(
                    format!("compute_ceilings[{i}].flops_per_sec"),
                    SpecErrorKind::NotPositive(c.flops_per_sec),
                ));
            }
        }
        if self.memory_ceilings.is_empty() {
            return Err(SpecError::at("memory_ceilings", SpecErrorKind::NoCeilings));
        }
        let mut seen = BTreeSet::new();
        for (i, m) in self.memory_ceilings.iter().enumerate() {
            check_label(&m.label, &mut seen, || format!("memory_ceilings[{i}].label"))?;
            if !(m.bytes_per_sec.is_finite() && m.bytes_per_sec > 0.0) {
                return Err(SpecError::at(
                    format!("memory_ceilings[{i}].bytes_per_sec"),
                    SpecErrorKind::NotPositive(m.bytes_per_sec),
                ));
            }
        }
        if !(self.launch_overhead_sec.is_finite() && self.launch_overhead_sec >= 0.0) {
            return Err(SpecError::at(
                "launch_overhead_sec",
                SpecErrorKind::Negative(self.launch_overhead_sec),
            ));
        }
        Ok(())
    }

    pub fn compute_ceiling(&self, label: &str) -> Option<&ComputeCeiling> {
        self.compute_ceilings.iter().find(|c| c.label == label)
    }

    pub fn memory_ceiling(&self, label: &str) -> Option<&MemoryCeiling> {
        self.memory_ceilings.iter().find(|m| m.label == label)
    }

    /// Resolves a ceiling pair. `None` selects the first ceiling of that kind.
    pub fn select(&self, compute: Option<&str>, memory: Option<&str>) -> Result<Ceilings<'_>, SpecError> {
        let compute = match compute {
            Some(label) => self
                .compute_ceiling(label)
                .ok_or_else(|| SpecError::at("compute_ceilings", SpecErrorKind::UnknownCeiling(label.into())))?,
            None => self
                .compute_ceilings
                .first()
                .ok_or_else(|| SpecError::at("compute_ceilings", SpecErrorKind::NoCeilings))?,
        };
        let memory = match memory {
            Some(label) => self
                .memory_ceiling(label)
                .ok_or_else(|| SpecError::at("memory_ceilings", SpecErrorKind::UnknownCeiling(label.into())))?,
            None => self
                .memory_ceilings
                .first()
                .ok_or_else(|| SpecError::at("memory_ceilings", SpecErrorKind::NoCeilings))?,
        };
        Ok(Ceilings { compute, memory })
    }

    /// Default selection: first compute and first memory ceiling.
    pub fn default_ceilings(&self) -> Result<Ceilings<'_>, SpecError> {
        self.select(None, None)
    }
}

fn check_label(label: &str, seen: &mut BTreeSet<String>, path: impl Fn() -> String) -> Result<(), SpecError> {
    if label.is_empty() {
        return Err(SpecError::at(path(), SpecErrorKind::EmptyLabel));
    }
    if !seen.insert(label.into()) {
        return Err(SpecError::at(path(), SpecErrorKind::DuplicateLabel(label.into())));
    }
    Ok(())
}

/// The compute/memory ceiling pair an analysis runs against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ceilings<'a> {
    pub compute: &'a ComputeCeiling,
    pub memory: &'a MemoryCeiling,
}

impl Ceilings<'_> {
    pub fn peak_flops(&self) -> f64 {
        self.compute.flops_per_sec
    }

    pub fn peak_bandwidth(&self) -> f64 {
        self.memory.bytes_per_sec
    }

    pub fn machine_balance(&self) -> f64 {
        machine_balance(self.compute, self.memory)
    }
}

/// Factors of the theoretical Tensor Core peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorCorePeakParams {
    sm_count: u32,
    tc_per_sm: u32,
    clock_hz: f64,
    ops_per_tc_per_cycle: u32,
    fma_factor: u32,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorCoreParamError {
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("clock must be a finite positive frequency, got {0} Hz")]
    Clock(f64),
}

impl TensorCorePeakParams {
    /// Uses the 4x4x4 matrix-multiply-accumulate tile (64 ops per cycle) and
    /// counts each fused multiply-add as two FLOPs.
    pub fn new(sm_count: u32, tc_per_sm: u32, clock_hz: f64) -> Result<Self, TensorCoreParamError> {
        Self::with_factors(sm_count, tc_per_sm, clock_hz, 64, 2)
    }

    pub fn with_factors(
        sm_count: u32,
        tc_per_sm: u32,
        clock_hz: f64,
        ops_per_tc_per_cycle: u32,
        fma_factor: u32,
    ) -> Result<Self, TensorCoreParamError> {
        for (value, name) in [
            (sm_count, "sm_count"),
            (tc_per_sm, "tc_per_sm"),
            (ops_per_tc_per_cycle, "ops_per_tc_per_cycle"),
            (fma_factor, "fma_factor"),
        ] {
            if value == 0 {
                return Err(TensorCoreParamError::Zero(name));
            }
        }
        if !(clock_hz.is_finite() && clock_hz > 0.0) {
            return Err(TensorCoreParamError::Clock(clock_hz));
        }
        Ok(Self {
            sm_count,
            tc_per_sm,
            clock_hz,
            ops_per_tc_per_cycle,
            fma_factor,
        })
    }

    pub fn sm_count(&self) -> u32 {
        self.sm_count
    }

    pub fn tc_per_sm(&self) -> u32 {
        self.tc_per_sm
    }

    pub fn clock_hz(&self) -> f64 {
        self.clock_hz
    }

    pub fn ops_per_tc_per_cycle(&self) -> u32 {
        self.ops_per_tc_per_cycle
    }

    pub fn fma_factor(&self) -> u32 {
        self.fma_factor
    }
}

/// SMs x units per SM x clock x ops per unit per cycle x FMA factor, in FLOP/s.
pub fn derive_tensor_core_peak(p: &TensorCorePeakParams) -> f64 {
    // integer factors are multiplied exactly before touching the clock
    let units =
        u64::from(p.sm_count) * u64::from(p.tc_per_sm) * u64::from(p.ops_per_tc_per_cycle) * u64::from(p.fma_factor);
    units as f64 * p.clock_hz
}

/// Arithmetic intensity (FLOPs/Byte) at which the two ceilings meet.
pub fn machine_balance(c: &ComputeCeiling, m: &MemoryCeiling) -> f64 {
    c.flops_per_sec / m.bytes_per_sec
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn v100() -> MachineSpec {
        MachineSpec::new(
            "V100",
            vec![
                ComputeCeiling::new("tensor_core", 1.07479e14),
                ComputeCeiling::new("fp16", 2.918e13),
                ComputeCeiling::new("fp32", 1.516e13),
            ],
            vec![MemoryCeiling::new("hbm", 8.288e11)],
            4.2e-6,
        )
        .unwrap()
    }

    #[test]
    fn tensor_core_peak_of_v100() {
        let p = TensorCorePeakParams::new(80, 8, 1.312e9).unwrap();
        let peak = derive_tensor_core_peak(&p);
        assert!((peak - 1.07479e14).abs() / 1.07479e14 < 1e-3, "{peak}");
    }

    #[test]
    fn tensor_core_peak_small_cases() {
        let unit = TensorCorePeakParams::with_factors(1, 1, 1.0, 1, 1).unwrap();
        assert_eq!(derive_tensor_core_peak(&unit), 1.0);
        let p = TensorCorePeakParams::with_factors(2, 4, 1.0e9, 64, 2).unwrap();
        // 2 * 4 * 64 * 2 = 1024 units at 1 GHz
        assert_eq!(derive_tensor_core_peak(&p), 1024.0 * 1.0e9);
    }

    #[test]
    fn tensor_core_params_reject_zero_factors() {
        assert_eq!(
            TensorCorePeakParams::new(0, 8, 1.0e9),
            Err(TensorCoreParamError::Zero("sm_count"))
        );
        assert!(TensorCorePeakParams::new(80, 8, 0.0).is_err());
        assert!(TensorCorePeakParams::new(80, 8, f64::NAN).is_err());
        assert!(TensorCorePeakParams::with_factors(1, 1, 1.0, 1, 0).is_err());
    }

    #[test]
    fn machine_balance_values() {
        let m = v100();
        let hbm = &m.memory_ceilings[0];
        let tc = machine_balance(&m.compute_ceilings[0], hbm);
        assert!((tc - 129.68).abs() < 0.01, "{tc}");
        let fp32 = machine_balance(m.compute_ceiling("fp32").unwrap(), hbm);
        assert!((fp32 - 18.29).abs() < 0.01, "{fp32}");
        let same = machine_balance(&ComputeCeiling::new("x", 3.5e12), &MemoryCeiling::new("y", 3.5e12));
        assert_eq!(same, 1.0);
    }

    #[test]
    fn validation_reports_key_paths() {
        let mut m = v100();
        m.memory_ceilings[0].bytes_per_sec = 0.0;
        assert_eq!(m.validate().unwrap_err().path, "memory_ceilings[0].bytes_per_sec");

        let mut m = v100();
        m.compute_ceilings[2].label = "fp16".into();
        let err = m.validate().unwrap_err();
        assert_eq!(err.path, "compute_ceilings[2].label");
        assert_eq!(err.kind, SpecErrorKind::DuplicateLabel("fp16".into()));

        let mut m = v100();
        m.launch_overhead_sec = -1.0;
        assert_eq!(m.validate().unwrap_err().path, "launch_overhead_sec");

        let mut m = v100();
        m.compute_ceilings.clear();
        assert_eq!(m.validate().unwrap_err().kind, SpecErrorKind::NoCeilings);
    }

    #[test]
    fn ceiling_selection() {
        let m = v100();
        let sel = m.default_ceilings().unwrap();
        assert_eq!(sel.compute.label, "tensor_core");
        assert_eq!(sel.memory.label, "hbm");
        let sel = m.select(Some("fp32"), None).unwrap();
        assert_eq!(sel.peak_flops(), 1.516e13);
        let err = m.select(Some("l2"), None).unwrap_err();
        assert_eq!(err.kind, SpecErrorKind::UnknownCeiling("l2".into()));
    }

    proptest::proptest! {
        #[test]
        fn tensor_core_peak_is_multiplicative(
            sms in 1u32..200, tcs in 1u32..16, clock in 1.0e8f64..3.0e9,
            ops in 1u32..256, fma in 1u32..4, which in 0usize..5,
        ) {
            let base = TensorCorePeakParams::with_factors(sms, tcs, clock, ops, fma).unwrap();
            let doubled = match which {
                0 => TensorCorePeakParams::with_factors(2 * sms, tcs, clock, ops, fma),
                1 => TensorCorePeakParams::with_factors(sms, 2 * tcs, clock, ops, fma),
                2 => TensorCorePeakParams::with_factors(sms, tcs, 2.0 * clock, ops, fma),
                3 => TensorCorePeakParams::with_factors(sms, tcs, clock, 2 * ops, fma),
                _ => TensorCorePeakParams::with_factors(sms, tcs, clock, ops, 2 * fma),
            }.unwrap();
            let a = 2.0 * derive_tensor_core_peak(&base);
            let b = derive_tensor_core_peak(&doubled);
            proptest::prop_assert!((a - b).abs() <= f64::EPSILON * a);
        }

        #[test]
        fn balance_times_bandwidth_is_peak(flops in 1.0e9f64..1.0e16, bw in 1.0e8f64..1.0e13) {
            let c = ComputeCeiling::new("c", flops);
            let m = MemoryCeiling::new("m", bw);
            let back = machine_balance(&c, &m) * bw;
            proptest::prop_assert!((back - flops).abs() / flops <= 1e-12);
        }
    }
}
