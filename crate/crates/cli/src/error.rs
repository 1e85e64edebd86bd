// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

use crate::modelfile::ModelError;

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_MODEL: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("invalid model: {0}")]
    Model(#[from] ModelError),

    #[error("numeric failure: {0}")]
    Numeric(hypobridge::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => EXIT_USAGE,
            CliError::Model(_) => EXIT_MODEL,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<hypobridge::Error> for CliError {
    /// Errors raised while running a command on an already valid model.
    fn from(e: hypobridge::Error) -> Self {
        use hypobridge::Error as E;
        match e {
            E::InvalidArgument(_)
            | E::BadGrid(_)
            | E::BadTimeOrder { .. }
            | E::ShapeMismatch(_)
            | E::UnknownPreset(_)
            | E::UnsupportedDimension { .. } => CliError::Usage(e.to_string()),
            E::NotControllable { .. } => CliError::Model(ModelError::Invalid(e)),
            _ => CliError::Numeric(e),
        }
    }
}
