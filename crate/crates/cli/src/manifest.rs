//! `run.json`: what was run, on which inputs, against which model.
//!
//! Only options that can change the artifacts are recorded. Concurrency,
//! batch size, cache location and the output directory are left out so that
//! the manifest is as reproducible as the outputs it describes.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub role: &'static str,
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of_bytes(role: &'static str, path: &Path, bytes: &[u8]) -> Self {
        InputDigest { role, path: path.display().to_string(), sha256: hex::encode(Sha256::digest(bytes)) }
    }
}

#[derive(Debug, Serialize)]
pub struct BackendInfo {
    pub kind: String,
    pub model_id: String,
    pub endpoint: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub command: &'static str,
    pub version: &'static str,
    pub config: C,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<BackendInfo>,
    pub inputs: Vec<InputDigest>,
}

impl<C: Serialize> RunManifest<C> {
    pub fn new(command: &'static str, config: C, backend: Option<BackendInfo>, inputs: Vec<InputDigest>) -> Self {
        RunManifest { command, version: env!("CARGO_PKG_VERSION"), config, backend, inputs }
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        let path = out_dir.join("run.json");
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}
