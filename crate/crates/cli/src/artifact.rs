//! JSON artifact envelope. Every file the CLI writes embeds the resolved
//! configuration and a SHA-256 digest of each input so a run can be audited
//! and reproduced byte for byte.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct InputRef {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Artifact<T: Serialize> {
    pub kind: &'static str,
    pub tool_version: &'static str,
    pub inputs: Vec<InputRef>,
    /// The fully resolved settings the command ran with.
    pub config: Value,
    pub payload: T,
}

pub fn sha256_file(path: &Path) -> Result<InputRef, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(InputRef {
        path: path.display().to_string(),
        sha256: format!("{:x}", hasher.finalize()),
    })
}

pub fn write<T: Serialize>(
    path: &Path,
    kind: &'static str,
    inputs: Vec<InputRef>,
    config: Value,
    payload: T,
) -> Result<(), CliError> {
    let artifact = Artifact {
        kind,
        tool_version: env!("CARGO_PKG_VERSION"),
        inputs,
        config,
        payload,
    };
    let json = serde_json::to_string_pretty(&artifact)
        .map_err(|e| CliError::Usage(format!("serialization failed: {e}")))?;
    std::fs::write(path, json + "\n")
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}
