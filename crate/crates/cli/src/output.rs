use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// An output file opened before the (possibly long) computation, so an
/// unwritable path fails fast.
pub struct PendingFile {
    path: PathBuf,
    file: File,
}

impl PendingFile {
    pub fn create(path: &Path) -> CliResult<Self> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self { path: path.to_path_buf(), file })
    }

    pub fn finish(mut self, contents: &str) -> CliResult<OutputDigest> {
        self.file
            .write_all(contents.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|e| CliError::io(&self.path, e))?;
        Ok(OutputDigest { path: self.path.display().to_string(), sha256: sha256_hex(contents.as_bytes()), bytes: contents.len() })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Companion path `<stem>.fit.csv` next to `path`.
pub fn fit_path(path: &Path) -> PathBuf {
    path.with_extension("fit.csv")
}

/// Rows of a CSV table; floats use the shortest round-trip representation.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: format!("{}\n", header.join(",")) }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// What a subcommand hands back to be wrapped into the report.
pub struct CommandOutput {
    pub params: Value,
    pub results: Value,
    pub outputs: Vec<OutputDigest>,
    pub summary: Vec<String>,
    /// Set when a solver did not certify its answer (exit code 3).
    pub failure: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub params: Value,
    pub base_seed: u64,
    pub threads: usize,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputDigest>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub params: Value,
    pub seed: u64,
    pub results: Value,
    pub manifest: Manifest,
}
