use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use tsgan_core::data::digest;

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Record of one command invocation, enough to re-run it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name, as originally given.
    pub argv: Vec<String>,
    pub seed: u64,
    pub preset: Option<String>,
    pub config: RunConfig,
    pub inputs: Vec<FileDigest>,
    /// Relative to the output directory.
    pub outputs: Vec<FileDigest>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

pub fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

pub fn manifest_name(command: &str) -> String {
    format!("{command}.manifest.json")
}

/// Output directory that records what gets written into it.
pub struct Outputs {
    pub dir: PathBuf,
    pub written: Vec<FileDigest>,
    pub inputs: Vec<FileDigest>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Outputs { dir: dir.to_path_buf(), written: Vec::new(), inputs: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.written.push(FileDigest { path: name.to_string(), sha256: digest(bytes) });
        Ok(path)
    }

    /// Records a file some library routine already wrote under the output directory.
    pub fn record(&mut self, name: &str) -> Result<(), CliError> {
        let bytes = fs::read(self.dir.join(name))?;
        self.written.push(FileDigest { path: name.to_string(), sha256: digest(&bytes) });
        Ok(())
    }

    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = fs::read(path).map_err(|e| {
            CliError::Core(tsgan_core::Error::Data(format!("cannot read {}: {e}", path.display())))
        })?;
        self.note_input(path, &bytes);
        Ok(bytes)
    }

    pub fn note_input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push(FileDigest { path: path.display().to_string(), sha256: digest(bytes) });
    }
}

/// Fails if any recorded input no longer has the recorded digest.
pub fn verify_inputs(m: &RunManifest) -> Result<(), CliError> {
    for f in &m.inputs {
        let bytes = fs::read(&f.path)
            .map_err(|e| CliError::Core(tsgan_core::Error::Data(format!("replay input {}: {e}", f.path))))?;
        if digest(&bytes) != f.sha256 {
            return Err(CliError::Core(tsgan_core::Error::Data(format!(
                "replay input {} changed since the recorded run",
                f.path
            ))));
        }
    }
    Ok(())
}
