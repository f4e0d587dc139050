use std::fmt;
use std::path::Path;

use poolrate_core::instance::{validate_with_budget, Diagnostics};
use poolrate_core::{Budget, ProblemInstance};
use sha2::{Digest, Sha256};

/// Instance file that failed to read or parse.
#[derive(Debug)]
pub enum LoadError {
    Io(String, std::io::Error),
    Utf8(String),
    Parse { path: String, line: usize, column: usize, message: String },
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Io(p, e) => write!(f, "cannot read {p}: {e}"),
            LoadError::Utf8(p) => write!(f, "{p} is not valid UTF-8"),
            LoadError::Parse { path, line, column, message } => {
                write!(f, "{path}:{line}:{column}: parse error: {message}")
            }
        }
    }
}

impl std::error::Error for LoadError {}

pub struct Loaded {
    pub instance: ProblemInstance,
    pub bytes: Vec<u8>,
    pub sha256: String,
    pub diagnostics: Diagnostics,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parse without validating. Unknown keys are rejected by the schema.
pub fn parse_instance(path: &Path) -> Result<(ProblemInstance, Vec<u8>), LoadError> {
    let name = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|e| LoadError::Io(name.clone(), e))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| LoadError::Utf8(name.clone()))?;
    let inst = serde_json::from_str(text).map_err(|e| LoadError::Parse {
        path: name,
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ok((inst, bytes))
}

pub fn load_instance(path: &Path, budget: Budget) -> anyhow::Result<Loaded> {
    let (instance, bytes) = parse_instance(path)?;
    let diagnostics = validate_with_budget(&instance, budget)?;
    Ok(Loaded {
        sha256: sha256_hex(&bytes),
        instance,
        bytes,
        diagnostics,
    })
}
