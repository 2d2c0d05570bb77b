//! File formats and the command line for `roofkit-core`.
//!
//! Machine specs, sweep configs and reports are JSON; profiles are CSV with a
//! fixed header. Charts are written as SVG by the core crate.

pub mod cli;
pub mod error;
pub mod machine_io;
pub mod profile_io;
pub mod report_io;
pub mod sweep_io;

pub use error::{Error, Result};
pub use roofkit_core as core;
