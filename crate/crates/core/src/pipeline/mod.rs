//! End-to-end orchestration: simulate, label, train, score, link,
//! aggregate, release, rank, inspect and evaluate, with artifacts written
//! to one directory and checksummed in a manifest.
//!
//! Each stage is a pure function over in-memory values ([`stages`]);
//! [`execute`] chains them and [`run_pipeline`] also writes the artifacts.
//! The stage-by-stage commands in [`steps`] read earlier artifacts back.

mod artifacts;
mod config;
mod report;
pub mod stages;
pub mod steps;

use std::fmt;

pub use artifacts::{
    read_inspections, read_metrics, read_query_labels, read_wsm_metrics, require, sha256_file, write_config,
    write_evaluation, write_inspections, write_manifest, write_rank, write_simulation, write_tables, write_training,
    ArtifactPaths, Manifest, ManifestEntry, MetricValue,
};
pub use config::{EvalConfig, PrivacyConfig, RankConfig, RunConfig};
pub use report::report;
pub use stages::{execute, run_pipeline, RankOutput, RunOutput, Tables, TrainOutput, WsmEvaluation};

/// Process exit classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments or configuration.
    Usage,
    /// Unreadable, malformed or invalid data.
    Data,
    /// Divergence, separation or a singular system.
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Numerical => 3,
        }
    }
}

/// A stage failure: the stage name, its class and the cause.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineError {
    pub stage: &'static str,
    pub kind: ErrorKind,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: &'static str, kind: ErrorKind, message: impl Into<String>) -> Self {
        PipelineError { stage, kind, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.message)
    }
}

impl std::error::Error for PipelineError {}

/// Error types that know their exit class.
pub trait Classify: fmt::Display {
    fn kind(&self) -> ErrorKind;

    fn in_stage(&self, stage: &'static str) -> PipelineError {
        PipelineError::new(stage, self.kind(), self.to_string())
    }
}

impl Classify for crate::citysim::SimError {
    fn kind(&self) -> ErrorKind {
        match self {
            crate::citysim::SimError::UnknownRestaurant(_) => ErrorKind::Data,
            _ => ErrorKind::Usage,
        }
    }
}

impl Classify for crate::wsm::WsmError {
    fn kind(&self) -> ErrorKind {
        match self {
            crate::wsm::WsmError::Diverged { .. } => ErrorKind::Numerical,
            crate::wsm::WsmError::InvalidArgument(_) => ErrorKind::Usage,
            _ => ErrorKind::Data,
        }
    }
}

impl Classify for crate::stats::StatsError {
    fn kind(&self) -> ErrorKind {
        match self {
            crate::stats::StatsError::InvalidArgument(_) => ErrorKind::Data,
            _ => ErrorKind::Numerical,
        }
    }
}

impl Classify for crate::logdata::LogDataError {
    fn kind(&self) -> ErrorKind {
        ErrorKind::Data
    }
}

impl Classify for crate::privacy::PrivacyError {
    fn kind(&self) -> ErrorKind {
        ErrorKind::Usage
    }
}

impl Classify for std::io::Error {
    fn kind(&self) -> ErrorKind {
        ErrorKind::Data
    }
}

/// `map_err` adapter: `.map_err(at("rank"))`.
pub fn at<E: Classify>(stage: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| e.in_stage(stage)
}
