// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use smoothdos::estimators::EstimatorError;
use smoothdos::verify::VerifyError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Parse(String),
    #[error("{path}: {reason}")]
    Validation { path: String, reason: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("outputs differ from the manifest:\n{0}")]
    Mismatch(String),
}

impl CliError {
    /// 0 success, 1 I/O or reproduction mismatch, 2 invalid input, 3
    /// numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Validation { .. } | CliError::Manifest(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } | CliError::Mismatch(_) => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<EstimatorError> for CliError {
    fn from(e: EstimatorError) -> Self {
        match e {
            EstimatorError::Config { field, reason } => CliError::Validation { path: format!("run.{field}"), reason },
            EstimatorError::Solver(_) | EstimatorError::Density(_) | EstimatorError::Pool(_) | EstimatorError::Fit(_) => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Validation { path: "run".into(), reason: other.to_string() },
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Solver(_) | VerifyError::Density(_) => CliError::Numerical(e.to_string()),
            other => CliError::Validation { path: "verify".into(), reason: other.to_string() },
        }
    }
}
