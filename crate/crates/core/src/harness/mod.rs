//! Instance files, random instances, the integrality experiment and reports.

pub mod experiment;
pub mod format;
pub mod generator;
pub mod report;

use std::path::Path;

use thiserror::Error;

use crate::model::{derive_time_windows, validate_instance, Instance, ValidatedInstance, ValidationError, WindowError};

pub use experiment::{run_experiment, ExperimentStats};
pub use format::{emit_instance, parse_instance_str, ParseError};
pub use generator::{generate_instance, GenerationError, GeneratorParams};
pub use report::{run_scenario, Mode, ReportFormat, ScenarioError, ScenarioReport};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error(transparent)]
    Windows(#[from] WindowError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

/// Reads and parses an instance file without deriving windows.
pub fn parse_instance(path: impl AsRef<Path>) -> Result<Instance, LoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
    parse_instance_str(&text).map_err(|source| LoadError::Parse { path: path.display().to_string(), source })
}

/// Fills missing windows from the file's hold allowances and validates.
pub fn prepare_instance(inst: Instance) -> Result<ValidatedInstance, LoadError> {
    let h = inst.holds;
    let inst = derive_time_windows(inst, h.max_ground_hold, h.max_air_hold, h.allow_early)?;
    Ok(validate_instance(inst)?)
}

/// Parse, derive windows, validate.
pub fn load_instance(path: impl AsRef<Path>) -> Result<ValidatedInstance, LoadError> {
    prepare_instance(parse_instance(path)?)
}
