//! Experiment runner behind the `paretomtl` binary: config parsing, batch
//! execution, CSV/JSON/SVG artifacts, front comparison and the
//! initialization ablation.

mod artifacts;
mod compare;
mod config;
mod run;
mod svg;

use std::path::PathBuf;

pub use artifacts::{format_float, FrontMetrics, MetricsInputs};
pub use compare::{cmd_compare, read_front, CompareOptions, Comparison, FrontRow, SourceMetrics};
pub use config::{
    load_config, parse_config, Algorithm, ConfigError, LinearWeightSpec, PreferenceSpec, ProblemSpec, ResolvedConfig,
    DEFAULT_OUTPUT_DIR,
};
pub use run::{
    cmd_ablate_init, cmd_run, linear_weights, run_experiment, write_artifacts, AblationReport, RunRecord, RunReport,
    INCOMPLETE_MARKER, OUTPUT_DIR_ENV,
};

/// Failure of a CLI command.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] crate::Error),
}

impl CliError {
    /// Process exit status: 2 for bad input, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Invalid(_) => 2,
            CliError::Core(crate::Error::InvalidArgument(_)) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}
