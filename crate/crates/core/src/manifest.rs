//! Run manifests: what was run, with which settings, and digests of every
//! file it wrote.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    /// Fully resolved configuration, defaults included.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub wall_clock_s: f64,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects output files for one run and writes the manifest last.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    started: Instant,
    outputs: Vec<OutputDigest>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            started: Instant::now(),
            outputs: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, bytes)?;
        self.outputs.push(OutputDigest {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn finish(self, command: Vec<String>, config: serde_json::Value, seed: Option<u64>) -> Result<RunManifest> {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            config,
            seed,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.root.join(MANIFEST_FILE), text)?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_known_value() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn lists_every_output() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(&dir.path().join("run")).unwrap();
        out.write("a.csv", b"x\n1\n").unwrap();
        out.write("b.json", b"{}").unwrap();
        let m = out.finish(vec!["blink".into()], serde_json::json!({"k": 1}), Some(7)).unwrap();
        assert_eq!(m.outputs.len(), 2);
        let text = fs::read_to_string(dir.path().join("run").join(MANIFEST_FILE)).unwrap();
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        for o in &back.outputs {
            let bytes = fs::read(dir.path().join("run").join(&o.path)).unwrap();
            assert_eq!(sha256_hex(&bytes), o.sha256);
        }
    }
}
