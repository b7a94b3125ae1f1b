//! Experiment harness for the power-coefficient estimator: configuration,
//! runs with CSV/JSON output, the generator-torque sweep and the oracle
//! suite behind `cpest verify`.

pub mod config;
pub mod error;
pub mod experiments;
pub mod verify;

pub use config::{ScenarioConfig, ScenarioKind};
pub use error::CliError;
