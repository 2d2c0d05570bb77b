//! Time-based roofline analysis.
//!
//! The crate models a machine as compute ceilings, memory ceilings and a
//! per-launch overhead, places workloads in four views (classic roofline,
//! complexity plane, compute/bandwidth time plane, and the combined
//! complexity-time chart), classifies them as compute-, bandwidth- or
//! overhead-bound, and renders the views as SVG.
//!
//! `no_std` with `alloc`; file formats and the CLI live in the `roofkit`
//! crate.

#![no_std]

extern crate alloc;

pub mod cost;
pub mod machine;
pub mod plot;
pub mod profile;
pub mod report;
pub mod roofline;
pub mod sweep;
pub mod units;

pub use cost::{Conv2DSpec, ConvWeightTraffic, InvocationModel, LayerSpec, LstmSpec, WeightTraffic};
pub use machine::{Ceilings, ComputeCeiling, MachineSpec, MemoryCeiling, TensorCorePeakParams};
pub use profile::{FlopWeights, KernelAggregate, KernelRecord, WorkloadProfile};
pub use roofline::{AnalyzedKernel, BoundClass, ComplexityPoint, TimePoint};
pub use sweep::{SeriesKind, SweepSeries};
