use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::clustering::ClusterError;
use crate::descriptives::DescriptiveError;
use crate::dissimilarity::DissimilarityError;
use crate::plots::PlotError;
use crate::sequence::SequenceError;
use crate::survival::SurvivalError;
use crate::synth::SynthError;

use super::VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments or input files.
    Validation,
    /// Valid input on which the analysis itself failed.
    Computation,
}

impl ErrorKind {
    pub fn code(self) -> i32 {
        match self {
            ErrorKind::Validation => 1,
            ErrorKind::Computation => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Validation => "validation",
            ErrorKind::Computation => "computation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Validation,
            message: message.into(),
        }
    }

    pub fn computation(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Computation,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::validation(format!("{}: {e}", path.display()))
    }
}

impl From<SequenceError> for CliError {
    fn from(e: SequenceError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<DissimilarityError> for CliError {
    fn from(e: DissimilarityError) -> Self {
        match e {
            DissimilarityError::Pool(_) => Self::computation(e.to_string()),
            _ => Self::validation(e.to_string()),
        }
    }
}

impl From<ClusterError> for CliError {
    fn from(e: ClusterError) -> Self {
        match e {
            ClusterError::NonFinite | ClusterError::SilhouetteUndefined { .. } => Self::computation(e.to_string()),
            _ => Self::validation(e.to_string()),
        }
    }
}

impl From<DescriptiveError> for CliError {
    fn from(e: DescriptiveError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<SurvivalError> for CliError {
    fn from(e: SurvivalError) -> Self {
        if e.is_numerical() {
            Self::computation(e.to_string())
        } else {
            Self::validation(e.to_string())
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<PlotError> for CliError {
    fn from(e: PlotError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::validation(e.to_string())
    }
}

#[derive(Debug, Clone, Serialize)]
struct FileRecord {
    path: String,
    sha256: String,
    bytes: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    parameters: &'a serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    inputs: &'a [FileRecord],
    outputs: &'a [FileRecord],
    warnings: &'a [String],
}

pub(super) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects inputs, outputs and warnings of one command run.
pub(super) struct Run {
    command: &'static str,
    parameters: serde_json::Value,
    out_dir: PathBuf,
    seed: Option<u64>,
    inputs: Vec<FileRecord>,
    outputs: Vec<FileRecord>,
    warnings: Vec<String>,
    started: u64,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl Run {
    pub fn start(command: &'static str, parameters: serde_json::Value, out_dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
        Ok(Self {
            command,
            parameters,
            out_dir: out_dir.to_path_buf(),
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            warnings: Vec::new(),
            started: unix_now(),
        })
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        let key = path.display().to_string();
        if !self.inputs.iter().any(|r| r.path == key) {
            self.inputs.push(FileRecord {
                path: key,
                sha256: sha256_hex(&bytes),
                bytes: bytes.len(),
            });
        }
        Ok(bytes)
    }

    pub fn read_text(&mut self, path: &Path) -> Result<String, CliError> {
        String::from_utf8(self.read(path)?).map_err(|_| CliError::validation(format!("{}: not UTF-8 text", path.display())))
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.out_dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.outputs.retain(|r| r.path != name);
        self.outputs.push(FileRecord {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        let message = message.into();
        eprintln!("warning: {message}");
        self.warnings.push(message);
    }

    pub fn finish(self) -> Result<(), CliError> {
        let manifest = Manifest {
            tool: "seqpath",
            version: VERSION,
            command: self.command,
            parameters: &self.parameters,
            seed: self.seed,
            inputs: &self.inputs,
            outputs: &self.outputs,
            warnings: &self.warnings,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let name = format!("{}.manifest.json", self.command);
        let path = self.out_dir.join(&name);
        fs::write(&path, &text).map_err(|e| CliError::io(&path, e))?;
        let times = serde_json::json!({
            "command": self.command,
            "manifest": name,
            "started_unix": self.started,
            "finished_unix": unix_now(),
        });
        let path = self.out_dir.join(format!("{}.manifest.time.json", self.command));
        fs::write(&path, format!("{times:#}\n")).map_err(|e| CliError::io(&path, e))?;
        Ok(())
    }
}
