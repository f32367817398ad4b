//! Reproducible experiment runner behind the `wavelab` binary.
//!
//! A scenario file names one experiment, its parameters and a master seed.
//! Every parameter is checked against the owning module's preconditions
//! before any computation starts; results are computed in memory and only
//! then written, together with a `manifest.json` describing the run.

mod manifest;
mod runner;
mod scenario;

use std::path::PathBuf;

use thiserror::Error;

pub use manifest::Manifest;
pub use runner::{compute, run_file, run_scenario, ResultFile, RunOptions, RunReport};
pub use scenario::{
    ChshParams, EmulsionParams, EvolveParams, Experiment, GridParams, PacketParams, Scenario, SettingsDeg, SgParams,
    StatisticsParams, SweepParams,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("{context}: {source}")]
    Module {
        context: String,
        #[source]
        source: crate::Error,
    },
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub(crate) fn config(path: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Self::Config {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn module(context: impl Into<String>) -> impl FnOnce(crate::Error) -> Self {
        let context = context.into();
        move |source| Self::Module { context, source }
    }

    /// Process exit status: 2 for configuration errors, 3 for module
    /// errors, 1 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => 2,
            HarnessError::Module { .. } => 3,
            HarnessError::Io { .. } => 1,
        }
    }
}
