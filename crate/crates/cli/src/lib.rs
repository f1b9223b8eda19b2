//! Experiment drivers behind the `convexmix` binary.
//!
//! Each submodule backs one subcommand and is usable as a library: the
//! binary only parses flags, merges an optional JSON config and maps
//! errors to exit codes.

pub mod audit;
pub mod config;
pub mod experiment;
pub mod plot;
pub mod sweep;
pub mod verify;

use std::path::Path;

/// Exit code for invalid flags, inputs or constants.
pub const EXIT_USAGE: u8 = 2;
/// Exit code for a numeric failure during a run.
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] convexmix::Error),
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(convexmix::Error::Numeric { .. }) => EXIT_NUMERIC,
            _ => EXIT_USAGE,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Inequality tolerance, overridable through `CONVEXMIX_TOL`.
pub fn inequality_tolerance() -> Result<f64> {
    match std::env::var("CONVEXMIX_TOL") {
        Ok(v) => {
            let tol: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("CONVEXMIX_TOL={v:?} is not a number")))?;
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(CliError::usage(format!("CONVEXMIX_TOL must be nonnegative, got {tol}")));
            }
            Ok(tol)
        }
        Err(_) => Ok(convexmix::INEQUALITY_TOL),
    }
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable report");
    write_text(path, &(text + "\n"))
}

/// Creates the directory that will hold `path`.
pub fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| CliError::Output {
            path: parent.display().to_string(),
            source,
        })?;
    }
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(|source| CliError::Output {
        path: path.display().to_string(),
        source,
    })
}
