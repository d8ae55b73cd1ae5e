//! Experiment orchestration: configuration, the epsilon sweep, the ODE
//! oracle, refinement and stability studies, and file output.

pub mod config;
pub mod initial;
pub mod oracle;
pub mod output;
pub mod refine;
pub mod stability;
pub mod sweep;

use std::path::PathBuf;

pub use config::{load_config, parse_config, ConfigError, ExperimentConfig};
pub use initial::make_initial;
pub use oracle::{run_homogeneous_oracle, OracleReport, OracleSetup};
pub use refine::{run_refinement_study, RefinementReport};
pub use stability::{run_stability_probe, StabilityReport};
pub use sweep::{run_sweep, SweepOutcome, SweepRecord};

/// Exit statuses of the command-line tool.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const ACCEPTANCE_FAILURE: i32 = 1;
    pub const CONFIG_ERROR: i32 = 2;
    pub const SOLVER_FAILURE: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("solver failed{}: {source}", .epsilon.map(|e| format!(" at epsilon = {e:e}")).unwrap_or_default())]
    Solver {
        epsilon: Option<f64>,
        #[source]
        source: crate::Error,
    },

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => exit::CONFIG_ERROR,
            HarnessError::Solver { .. } | HarnessError::Io { .. } => exit::SOLVER_FAILURE,
        }
    }

    pub(crate) fn solver(epsilon: Option<f64>) -> impl FnOnce(crate::Error) -> Self {
        move |source| HarnessError::Solver { epsilon, source }
    }
}

impl From<crate::Error> for HarnessError {
    fn from(source: crate::Error) -> Self {
        HarnessError::Solver {
            epsilon: None,
            source,
        }
    }
}

/// One named pass/fail outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}
