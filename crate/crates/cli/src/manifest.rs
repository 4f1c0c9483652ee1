// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

//! JSON run manifests.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Version string recorded in manifests.
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Git-style content hash: SHA-256 of `blob <len>\0<bytes>`.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputRecord {
    /// File name inside the output directory.
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    /// Fully resolved configuration, including the command.
    pub config: ExperimentConfig,
    /// [`blob_hash`] of the serialised configuration.
    pub content_hash: String,
    pub code_version: String,
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputRecord>,
}

fn plain_file_name(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && name != MANIFEST_FILE
        && !name.contains(['/', '\\', '\0'])
        && !name.starts_with('.')
}

fn compatible(version: &str) -> bool {
    let major_minor = |v: &str| {
        let mut it = v.split('.');
        (it.next().map(str::to_owned), it.next().map(str::to_owned))
    };
    major_minor(version) == major_minor(CODE_VERSION)
}

impl RunManifest {
    pub fn new(config: ExperimentConfig, wall_time_seconds: f64, outputs: Vec<OutputRecord>) -> Self {
        let content_hash = blob_hash(config.to_text().as_bytes());
        Self { config, content_hash, code_version: CODE_VERSION.into(), wall_time_seconds, outputs }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises") + "\n"
    }

    /// Whether `content_hash` matches the embedded configuration.
    pub fn hash_matches(&self) -> bool {
        self.content_hash == blob_hash(self.config.to_text().as_bytes())
    }

    /// Parses and checks that the configuration validates, the code version
    /// is compatible and every output is a plain file name with a
    /// well-formed checksum. A stale content hash is left for
    /// [`crate::reproduce`] to report.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let m: Self = serde_json::from_str(text).map_err(|e| CliError::Manifest(e.to_string()))?;
        m.config.validate()?;
        if !compatible(&m.code_version) {
            return Err(CliError::Manifest(format!(
                "written by version {}, this is {CODE_VERSION}",
                m.code_version
            )));
        }
        for o in &m.outputs {
            if !plain_file_name(&o.file) {
                return Err(CliError::Manifest(format!("invalid output name `{}`", o.file)));
            }
            if o.sha256.len() != 64 || !o.sha256.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(CliError::Manifest(format!("malformed checksum for `{}`", o.file)));
            }
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }
}

impl OutputRecord {
    pub fn of(file: &str, bytes: &[u8]) -> Self {
        Self { file: file.into(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 }
    }
}
