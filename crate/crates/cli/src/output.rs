use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub config_sha256: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: Option<String>,
    pub config_sha256: Option<String>,
    pub seed: Option<u64>,
    pub artifacts: Vec<ArtifactEntry>,
}

/// Output directory that records every file written into `manifest.json`.
pub struct OutputDir {
    root: PathBuf,
    manifest: Manifest,
}

impl OutputDir {
    pub fn create(root: &Path, command: &str) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            manifest: Manifest {
                command: command.to_string(),
                config: None,
                config_sha256: None,
                seed: None,
                artifacts: Vec::new(),
            },
        })
    }

    pub fn set_config(&mut self, path: &Path, bytes: &[u8], seed: u64) {
        self.manifest.config = Some(path.display().to_string());
        self.manifest.config_sha256 = Some(sha256_hex(bytes));
        self.manifest.seed = Some(seed);
    }

    pub fn write(&mut self, relative: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
        }
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.manifest.artifacts.push(ArtifactEntry {
            path: relative.to_string(),
            sha256: sha256_hex(bytes),
            config_sha256: self.manifest.config_sha256.clone(),
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, relative: &str, value: &T) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(relative, &bytes)
    }

    pub fn finish(self) -> Result<PathBuf> {
        let path = self.root.join("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(&self.manifest)?;
        bytes.push(b'\n');
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}
