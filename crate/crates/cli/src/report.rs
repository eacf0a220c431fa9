//! Run reports: human-readable lines plus a deterministic JSON form.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA: u64 = 1;

/// Why a command could not produce a verdict.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or inputs the command cannot work with (exit 2).
    Usage(String),
    /// Unreadable or malformed input file (exit 3).
    Input { path: PathBuf, message: String },
}

impl CliError {
    pub fn usage(msg: impl fmt::Display) -> Self {
        CliError::Usage(msg.to_string())
    }

    pub fn input(path: &Path, msg: impl fmt::Display) -> Self {
        CliError::Input { path: path.to_path_buf(), message: msg.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input { .. } => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Input { path, message } => write!(f, "{}: {message}", path.display()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Default)]
pub struct Report {
    pub command: String,
    pub args: Vec<String>,
    pub backend: Option<String>,
    pub inputs: BTreeMap<String, String>,
    pub result: Map<String, Value>,
    /// `Some(false)` exits with status 1.
    pub verdict: Option<bool>,
    pub lines: Vec<String>,
    pub elapsed: Option<Duration>,
}

impl Report {
    pub fn new(command: &str, args: Vec<String>) -> Self {
        Report { command: command.to_string(), args, ..Default::default() }
    }

    pub fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.result.insert(key.to_string(), value.into());
    }

    pub fn backend(&mut self, b: impl fmt::Display) {
        self.backend = Some(b.to_string());
    }

    /// Records the sha256 of an input file's bytes.
    pub fn digest(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.insert(path.display().to_string(), hex::encode(Sha256::digest(bytes)));
    }

    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Some(false) => 1,
            _ => 0,
        }
    }

    pub fn to_json(&self) -> String {
        let mut v = json!({
            "schema": SCHEMA,
            "command": self.command,
            "args": self.args,
            "backend": self.backend,
            "inputs": self.inputs,
            "result": self.result,
            "verdict": self.verdict,
        });
        if let Some(d) = self.elapsed {
            v["elapsed_ms"] = json!(d.as_secs_f64() * 1e3);
        }
        // serde_json's default map is ordered, so keys come out sorted.
        serde_json::to_string_pretty(&v).expect("report serializes") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
        if let Some(d) = self.elapsed {
            out.push_str(&format!("elapsed = {:.3} ms\n", d.as_secs_f64() * 1e3));
        }
        out
    }
}
