use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::load::Loaded;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub instance_sha256: String,
    /// Shared by every CSV row written in this run.
    pub config_hash: String,
    pub config: Value,
    pub seed: Option<u64>,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

/// One output directory and everything written into it.
pub struct Run {
    dir: PathBuf,
    manifest: RunManifest,
}

/// First 16 hex digits of `sha256(instance || 0 || config json)`.
pub fn config_hash(instance: &[u8], config: &Value) -> String {
    let mut h = Sha256::new();
    h.update(instance);
    h.update([0u8]);
    h.update(serde_json::to_vec(config).expect("json value serializes"));
    hex::encode(h.finalize())[..16].to_string()
}

/// Write through a temporary sibling so readers never see a partial file.
fn atomic_write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).with_context(|| format!("cannot write {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("cannot move {} into place", path.display()))?;
    Ok(())
}

/// Add a `config_hash` column unless the table already has one.
fn tag_csv(bytes: &[u8], hash: &str) -> Vec<u8> {
    let text = String::from_utf8_lossy(bytes);
    let mut lines = text.lines();
    let Some(header) = lines.next() else {
        return bytes.to_vec();
    };
    if header.split(',').any(|c| c == "config_hash") {
        return bytes.to_vec();
    }
    let mut out = format!("{header},config_hash\n");
    for l in lines {
        out.push_str(l);
        out.push(',');
        out.push_str(hash);
        out.push('\n');
    }
    out.into_bytes()
}

impl Run {
    pub fn start(dir: &Path, command: &str, loaded: &Loaded, config: Value, seed: Option<u64>) -> anyhow::Result<Run> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Run {
            dir: dir.to_path_buf(),
            manifest: RunManifest {
                tool: "poolrate".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                instance_sha256: loaded.sha256.clone(),
                config_hash: config_hash(&loaded.bytes, &config),
                config,
                seed,
                started_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
                finished_at: String::new(),
                outputs: Vec::new(),
                warnings: Vec::new(),
            },
        })
    }

    pub fn hash(&self) -> &str {
        &self.manifest.config_hash
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        eprintln!("warning: {msg}");
        self.manifest.warnings.push(msg);
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        atomic_write(&self.dir.join(name), bytes)?;
        if !self.manifest.outputs.iter().any(|o| o == name) {
            self.manifest.outputs.push(name.to_string());
        }
        Ok(())
    }

    /// Render a table with one of the library writers and tag its rows.
    pub fn csv<F>(&mut self, name: &str, render: F) -> anyhow::Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> poolrate_core::Result<()>,
    {
        let mut buf = Vec::new();
        render(&mut buf)?;
        let tagged = tag_csv(&buf, &self.manifest.config_hash);
        self.write(name, &tagged)
    }

    pub fn finish(mut self) -> anyhow::Result<PathBuf> {
        if self.manifest.outputs.is_empty() {
            self.warn("no results were produced; writing the manifest only");
        }
        self.manifest.outputs.sort();
        self.manifest.finished_at = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
        let path = self.dir.join("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(&self.manifest)?;
        bytes.push(b'\n');
        atomic_write(&path, &bytes)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tagging_appends_a_column() {
        let t = tag_csv(b"a,b\n1,2\n3,4\n", "abc");
        assert_eq!(t, b"a,b,config_hash\n1,2,abc\n3,4,abc\n");
        assert_eq!(tag_csv(b"x,config_hash\n1,h\n", "abc"), b"x,config_hash\n1,h\n");
    }
}
