//! Per-run manifest: what went in, what came out, what failed.
//!
//! Manifests carry no wall-clock time, so two runs over the same config and
//! inputs serialize to the same bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluation::RNG_NAME;
use crate::io;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunError {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ticker: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub as_of: Option<NaiveDate>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Hash of command, config and input contents.
    pub run_id: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_start: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_end: Option<NaiveDate>,
    /// Label to SHA-256 of the file (or directory listing).
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub versions: BTreeMap<String, String>,
    pub errors: Vec<RunError>,
}

/// Hash of a directory: file names relative to `dir` and their contents, in sorted order.
pub fn sha256_dir(dir: &Path) -> Result<String> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, String)>) -> Result<()> {
        for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let p = entry.map_err(|e| Error::io(dir, e))?.path();
            if p.is_dir() {
                walk(root, &p, out)?;
            } else {
                let rel = p.strip_prefix(root).unwrap_or(&p).to_string_lossy().replace('\\', "/");
                out.push((rel, io::sha256_file(&p)?));
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    walk(dir, dir, &mut files)?;
    files.sort();
    let mut h = Sha256::new();
    for (name, digest) in files {
        h.update(name.as_bytes());
        h.update([0]);
        h.update(digest.as_bytes());
        h.update([b'\n']);
    }
    Ok(hex::encode(h.finalize()))
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config_hash: impl Into<String>, seed: u64) -> Self {
        let versions = BTreeMap::from([
            ("marketsense-core".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("rng".to_string(), RNG_NAME.to_string()),
        ]);
        Self {
            run_id: String::new(),
            command: command.into(),
            config_hash: config_hash.into(),
            seed,
            data_start: None,
            data_end: None,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            versions,
            errors: Vec::new(),
        }
    }

    /// Hashes a file or directory under `label`. Missing paths are skipped.
    pub fn add_input(&mut self, label: &str, path: &Path) -> Result<()> {
        let digest = if path.is_dir() {
            sha256_dir(path)?
        } else if path.is_file() {
            io::sha256_file(path)?
        } else {
            return Ok(());
        };
        self.inputs.insert(label.to_string(), digest);
        Ok(())
    }

    pub fn add_output(&mut self, label: &str, bytes: &[u8]) {
        self.outputs.insert(label.to_string(), io::sha256_hex(bytes));
    }

    pub fn set_version(&mut self, component: &str, version: &str) {
        self.versions.insert(component.to_string(), version.to_string());
    }

    pub fn record_error(&mut self, ticker: Option<&str>, as_of: Option<NaiveDate>, message: impl Into<String>) {
        self.errors.push(RunError { ticker: ticker.map(str::to_string), as_of, message: message.into() });
    }

    pub fn is_success(&self) -> bool {
        self.errors.is_empty()
    }

    /// Fixes `run_id` from the command, config hash and input hashes.
    pub fn seal(&mut self) {
        let mut h = Sha256::new();
        h.update(self.command.as_bytes());
        h.update([0]);
        h.update(self.config_hash.as_bytes());
        h.update([0]);
        h.update(self.seed.to_le_bytes());
        for (label, digest) in &self.inputs {
            h.update(label.as_bytes());
            h.update([0]);
            h.update(digest.as_bytes());
            h.update([b'\n']);
        }
        self.run_id = hex::encode(h.finalize());
    }

    /// Seals and writes the manifest into `dir`.
    pub fn write(&mut self, dir: &Path) -> Result<()> {
        self.seal();
        io::write_json(self, dir.join(MANIFEST_FILE))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_id_tracks_input_content() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("prices.csv");
        fs::write(&f, "a").unwrap();
        let mut a = RunManifest::new("backtest", "cfg", 7);
        a.add_input("prices", &f).unwrap();
        a.seal();
        let mut b = RunManifest::new("backtest", "cfg", 7);
        b.add_input("prices", &f).unwrap();
        b.seal();
        assert_eq!(io::to_json_bytes(&a).unwrap(), io::to_json_bytes(&b).unwrap());

        fs::write(&f, "b").unwrap();
        let mut c = RunManifest::new("backtest", "cfg", 7);
        c.add_input("prices", &f).unwrap();
        c.seal();
        assert_ne!(a.run_id, c.run_id);

        let mut d = RunManifest::new("backtest", "other", 7);
        d.add_input("prices", &f).unwrap();
        d.seal();
        assert_ne!(c.run_id, d.run_id);
    }

    #[test]
    fn directory_hash_ignores_listing_order_but_not_names() {
        let a = tempfile::tempdir().unwrap();
        fs::write(a.path().join("x.txt"), "1").unwrap();
        fs::write(a.path().join("y.txt"), "2").unwrap();
        let b = tempfile::tempdir().unwrap();
        fs::write(b.path().join("y.txt"), "2").unwrap();
        fs::write(b.path().join("x.txt"), "1").unwrap();
        assert_eq!(sha256_dir(a.path()).unwrap(), sha256_dir(b.path()).unwrap());
        fs::rename(b.path().join("y.txt"), b.path().join("z.txt")).unwrap();
        assert_ne!(sha256_dir(a.path()).unwrap(), sha256_dir(b.path()).unwrap());
    }

    #[test]
    fn errors_make_the_run_fail() {
        let mut m = RunManifest::new("signal", "cfg", 0);
        assert!(m.is_success());
        m.record_error(Some("AAPL"), None, "context window exceeded");
        assert!(!m.is_success());
    }
}
