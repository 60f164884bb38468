//! Error-to-exit-code mapping and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use fairflip_core::classifiers::ClassifierError;
use fairflip_core::data::DataError;
use fairflip_core::explain::ExplainError;
use fairflip_core::flip::FlipError;
use serde_json::Value;
use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_NOT_CONVERGED: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or missing flags, unreadable presets.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{0}")]
    Failed(String),
    /// Outputs were written but the solver stopped at a limit.
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(e) if e.is_schema() => EXIT_USAGE,
            CliError::Data(_) | CliError::Failed(_) => EXIT_DATA,
            CliError::NotConverged(_) => EXIT_NOT_CONVERGED,
        }
    }
}

impl From<FlipError> for CliError {
    fn from(e: FlipError) -> Self {
        match e {
            FlipError::Data(d) => CliError::Data(d),
            FlipError::InvalidEpsilon(_) | FlipError::Invalid(_) => CliError::Usage(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<ExplainError> for CliError {
    fn from(e: ExplainError) -> Self {
        match e {
            ExplainError::Data(d) => CliError::Data(d),
            ExplainError::InvalidDepth(_) => CliError::Usage(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        CliError::Failed(e.to_string())
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Failed(format!("{}: {e}", path.display()))
}

/// Writes to a temporary file in the target directory, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| io_err(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

pub fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s.into_bytes()
}

pub fn write_json(path: &Path, v: &Value) -> Result<(), CliError> {
    write_atomic(path, &json_bytes(v))
}

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}
