//! Run manifest: config echo plus a SHA-256 entry for every output file.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::SweepConfig;
use crate::table::TvChoice;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the manifest's directory, `/`-separated.
    pub path: String,
    pub role: String,
    pub algorithm: Option<String>,
    pub n0: Option<f64>,
    pub seed: Option<u64>,
    pub checksum: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    /// `sweep`, `train` or `test`.
    pub kind: String,
    pub config: SweepConfig,
    pub tv_weights: Vec<TvChoice>,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

impl RunManifest {
    pub fn new(kind: &str, config: &SweepConfig, tv_weights: Vec<TvChoice>) -> Self {
        RunManifest {
            artifact_version: ARTIFACT_VERSION.to_string(),
            kind: kind.to_string(),
            config: config.clone(),
            tv_weights,
            files: Vec::new(),
        }
    }

    /// Checksums `dir/rel` and records it.
    pub fn add_file(
        &mut self,
        dir: &Path,
        rel: &str,
        role: &str,
        algorithm: Option<&str>,
        n0: Option<f64>,
        seed: Option<u64>,
    ) -> Result<()> {
        let checksum = sha256_file(&dir.join(rel))?;
        self.files.push(FileEntry {
            path: rel.to_string(),
            role: role.to_string(),
            algorithm: algorithm.map(str::to_string),
            n0,
            seed,
            checksum,
        });
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }

    /// Every entry is unique and its file matches the recorded checksum.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        let mut seen = HashSet::new();
        for f in &self.files {
            if !seen.insert(&f.path) {
                bail!("{} is listed more than once", f.path);
            }
            let actual = sha256_file(&dir.join(&f.path))?;
            if actual != f.checksum {
                bail!(
                    "checksum mismatch for {}: recorded {}, found {actual}",
                    f.path,
                    f.checksum
                );
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
