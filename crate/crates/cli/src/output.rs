use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// Files of one run. Each write is hashed for the manifest.
pub struct Outputs {
    dir: PathBuf,
    hashes: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a RunConfig,
    model_sha256: String,
    versions: BTreeMap<&'static str, &'static str>,
    outputs: &'a BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Outputs { dir: dir.to_path_buf(), hashes: BTreeMap::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.hashes.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Buffers whatever `fill` writes, then stores it under `name`.
    pub fn write_with<E>(&mut self, name: &str, fill: impl FnOnce(&mut Vec<u8>) -> Result<(), E>) -> Result<()>
    where
        E: std::error::Error + Send + Sync + 'static,
    {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn finish(self, config: &RunConfig, model_bytes: &[u8]) -> Result<()> {
        let versions = BTreeMap::from([("qsdlab", qsdlab::VERSION), ("qsdlab-cli", env!("CARGO_PKG_VERSION"))]);
        let manifest = Manifest { config, model_sha256: sha256_hex(model_bytes), versions, outputs: &self.hashes };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
    }
}
