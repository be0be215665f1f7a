//! Scenario-driven pipelines over the `anosov-core` toolkit: ball
//! enumeration, limit cones, boundary curves, limit-point classification and
//! the acceptance suite.

pub mod pipeline;
pub mod scenario;
pub mod verify;

pub use scenario::{parse_scenario, ConfigError, Scenario};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ACCEPTANCE: i32 = 4;

#[derive(Clone, Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] anosov_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0} acceptance criteria failed")]
    Acceptance(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) | CliError::Io(_) => EXIT_NUMERICAL,
            CliError::Acceptance(_) => EXIT_ACCEPTANCE,
        }
    }
}

/// Reads and parses a scenario file; a missing file is a config error.
pub fn load_scenario(path: &std::path::Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        line: 0,
        field: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(parse_scenario(&text)?)
}
