use std::io;
use std::path::PathBuf;

use roofkit_core::cost::CostError;
use roofkit_core::machine::SpecError;
use roofkit_core::plot::PlotError;
use roofkit_core::report::ReportError;
use roofkit_core::roofline::AnalysisError;
use roofkit_core::sweep::SweepError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{origin}: at {key_path}: {message}")]
    Json {
        origin: String,
        key_path: String,
        message: String,
    },
    #[error("{origin}: {source}")]
    Spec { origin: String, source: SpecError },
    #[error("{origin}: line {line}: {message}")]
    Csv { origin: String, line: u64, message: String },
    #[error("{0}")]
    Cost(#[from] CostError),
    #[error("{0}")]
    Sweep(#[from] SweepError),
    #[error("{0}")]
    Analysis(#[from] AnalysisError),
    #[error("{0}")]
    Plot(#[from] PlotError),
    #[error("{0}")]
    Report(#[from] ReportError),
    #[error("{0}")]
    Input(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Internal(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
