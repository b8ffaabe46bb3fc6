//! Scenario runner for `wnncheck-core`: TOML configs, JSON/CSV reports and the
//! `wnncheck` command line.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{Check, Overrides, ScenarioConfig};
pub use runner::{run_scenario, Bundle, Overall};

/// Exit code for configuration errors.
pub const EXIT_CONFIG: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => 1,
        }
    }
}
