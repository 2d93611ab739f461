use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
}

/// Record of one command run. Contains no timestamps or absolute paths,
/// so equal inputs give byte-identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub command: String,
    pub version: String,
    pub input: String,
    pub input_sha256: String,
    pub seed: Option<u64>,
    pub params: Value,
    pub outputs: Vec<OutputEntry>,
}

impl RunManifest {
    pub fn new(command: &str, input: &Path, input_sha256: &str, seed: Option<u64>, params: Value) -> Self {
        Self {
            format_version: MANIFEST_FORMAT_VERSION,
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            input: input.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            input_sha256: input_sha256.to_string(),
            seed,
            params,
            outputs: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Writes files into one output directory and records them for the
/// manifest.
pub struct OutputDir<'a> {
    dir: &'a Path,
    entries: Vec<OutputEntry>,
}

impl<'a> OutputDir<'a> {
    pub fn create(dir: &'a Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir, entries: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.entries.push(OutputEntry { file: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    /// Write `manifest.json` listing every file written so far.
    pub fn finish(self, mut manifest: RunManifest) -> Result<RunManifest, CliError> {
        manifest.outputs = self.entries;
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, manifest.to_json()).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}
