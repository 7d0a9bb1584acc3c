//! Option resolution: command-line flag, then `--config` file, then default.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use bident_core::{BackendDescriptor, BackendKind, BatchOptions, NormalizationMode};
use serde::Deserialize;

use crate::args::{BackendArgs, BackendChoice};

pub const ENDPOINT_ENV: &str = "BIDENT_NLI_ENDPOINT";
const DEFAULT_TIMEOUT_SECS: u64 = 30;
const DEFAULT_ALPHA: f64 = 0.01;

/// Contents of a `--config` JSON file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub backend: Option<BackendChoice>,
    pub endpoint: Option<String>,
    pub model_id: Option<String>,
    pub timeout_secs: Option<u64>,
    pub norm: Option<NormalizationMode>,
    pub concurrency: Option<usize>,
    pub batch_size: Option<usize>,
    pub cache: Option<PathBuf>,
    pub metrics: Option<Vec<String>>,
    pub significance: Option<Vec<String>>,
    pub alpha: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn backend(&self, args: &BackendArgs) -> Result<BackendDescriptor> {
        let kind = args.backend.or(self.backend).unwrap_or(BackendChoice::Mock);
        let timeout = Duration::from_secs(args.timeout_secs.or(self.timeout_secs).unwrap_or(DEFAULT_TIMEOUT_SECS));
        let model_id = args.model_id.clone().or_else(|| self.model_id.clone());
        match kind {
            BackendChoice::Mock => Ok(BackendDescriptor { model_id, timeout, ..BackendDescriptor::mock() }),
            BackendChoice::Remote => {
                let endpoint = args
                    .endpoint
                    .clone()
                    .or_else(|| self.endpoint.clone())
                    .or_else(|| std::env::var(ENDPOINT_ENV).ok().filter(|e| !e.is_empty()));
                let Some(endpoint) = endpoint else {
                    bail!("remote backend needs --endpoint or {ENDPOINT_ENV}");
                };
                Ok(BackendDescriptor { kind: BackendKind::Remote, endpoint: Some(endpoint), model_id, timeout })
            }
        }
    }

    pub fn batch_options(&self, concurrency: Option<usize>, batch_size: Option<usize>) -> Result<BatchOptions> {
        let defaults = BatchOptions::default();
        let options = BatchOptions {
            batch_size: batch_size.or(self.batch_size).unwrap_or(defaults.batch_size),
            concurrency: concurrency.or(self.concurrency).unwrap_or(defaults.concurrency),
        };
        if options.batch_size == 0 || options.concurrency == 0 {
            bail!("--batch-size and --concurrency must be at least 1");
        }
        Ok(options)
    }

    pub fn alpha(&self, flag: Option<f64>) -> Result<f64> {
        let a = flag.or(self.alpha).unwrap_or(DEFAULT_ALPHA);
        if !(a > 0.0 && a < 1.0) {
            bail!("alpha must lie strictly between 0 and 1, got {a}");
        }
        Ok(a)
    }
}
