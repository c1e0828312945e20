//! Run manifests: every machine-readable report embeds the resolved command,
//! seed, tool version, and a digest of its inputs, so a rerun can be checked
//! for byte-identical reproduction.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// Subcommand name plus every resolved parameter.
    pub command: serde_json::Value,
    pub seed: u64,
    pub tool_version: String,
    /// SHA-256 over the raw bytes of all input files, in flag order; empty
    /// when the command reads no files.
    pub input_digest: String,
}

impl RunManifest {
    pub fn new(command: serde_json::Value, seed: u64, inputs: &[&Path]) -> io::Result<Self> {
        let input_digest = if inputs.is_empty() {
            String::new()
        } else {
            let mut hasher = Sha256::new();
            for path in inputs {
                hasher.update(fs::read(path)?);
            }
            format!("{:x}", hasher.finalize())
        };
        Ok(RunManifest {
            command,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_digest,
        })
    }
}

/// Write `bytes` to `path` atomically (same-directory temp file + rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp: PathBuf = path.to_path_buf();
    let mut name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?
        .to_os_string();
    name.push(".tmp");
    tmp.set_file_name(name);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}
