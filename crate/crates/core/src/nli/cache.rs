use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{EntailmentBackend, EntailmentDistribution, NliError, PairRequest};

#[derive(Debug, Serialize, Deserialize)]
struct CacheRecord {
    model_id: String,
    premise: String,
    hypothesis: String,
    contradiction: f64,
    entailment: f64,
    neutral: f64,
}

/// Persistent classification cache: an append-only JSONL file keyed by
/// (model_id, premise, hypothesis). The key is direction-sensitive and the
/// last record for a key wins on reload.
pub struct Cache {
    path: PathBuf,
    model_id: String,
    entries: Mutex<HashMap<(String, String), EntailmentDistribution>>,
    file: Mutex<File>,
}

impl Cache {
    /// Opens (or creates) the cache file and loads the entries recorded for
    /// `model_id`. Unreadable lines are skipped.
    pub fn open(path: impl AsRef<Path>, model_id: &str) -> std::io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (n, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheRecord>(&line) {
                    Ok(r) if r.model_id == model_id => {
                        if let Ok(d) = EntailmentDistribution::new(r.contradiction, r.entailment, r.neutral) {
                            entries.insert((r.premise, r.hypothesis), d);
                        }
                    }
                    Ok(_) => {}
                    Err(e) => log::warn!("{}:{}: skipping cache line: {e}", path.display(), n + 1),
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Cache { path, model_id: model_id.to_string(), entries: Mutex::new(entries), file: Mutex::new(file) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, premise: &str, hypothesis: &str) -> Option<EntailmentDistribution> {
        self.entries.lock().expect("cache lock").get(&(premise.to_string(), hypothesis.to_string())).copied()
    }

    /// Records a result in memory and appends it to the file. Each record
    /// is written with a single append so concurrent writers interleave at
    /// line granularity.
    pub fn insert(&self, premise: &str, hypothesis: &str, d: EntailmentDistribution) -> std::io::Result<()> {
        self.entries.lock().expect("cache lock").insert((premise.to_string(), hypothesis.to_string()), d);
        let record = CacheRecord {
            model_id: self.model_id.clone(),
            premise: premise.to_string(),
            hypothesis: hypothesis.to_string(),
            contradiction: d.contradiction,
            entailment: d.entailment,
            neutral: d.neutral,
        };
        let mut line = serde_json::to_string(&record).map_err(std::io::Error::other)?;
        line.push('\n');
        self.file.lock().expect("cache lock").write_all(line.as_bytes())
    }
}

/// Wraps a backend so that cached pairs never reach the transport.
pub struct CachedBackend<B> {
    inner: B,
    cache: Cache,
}

impl<B: EntailmentBackend> CachedBackend<B> {
    pub fn new(inner: B, cache: Cache) -> Result<Self, NliError> {
        if cache.model_id() != inner.model_id() {
            return Err(NliError::Cache(std::io::Error::other(format!(
                "cache opened for model {:?}, backend is {:?}",
                cache.model_id(),
                inner.model_id()
            ))));
        }
        Ok(CachedBackend { inner, cache })
    }

    pub fn cache(&self) -> &Cache {
        &self.cache
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: EntailmentBackend> EntailmentBackend for CachedBackend<B> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }

    fn classify_batch(&self, pairs: &[PairRequest]) -> Result<Vec<EntailmentDistribution>, NliError> {
        let mut out: Vec<Option<EntailmentDistribution>> =
            pairs.iter().map(|p| self.cache.get(&p.premise, &p.hypothesis)).collect();
        let misses: Vec<PairRequest> =
            pairs.iter().zip(&out).filter(|(_, hit)| hit.is_none()).map(|(p, _)| p.clone()).collect();

        if !misses.is_empty() {
            let fresh = self.inner.classify_batch(&misses)?;
            if fresh.len() != misses.len() {
                return Err(NliError::Malformed(format!("expected {} results, got {}", misses.len(), fresh.len())));
            }
            let mut fresh = misses.iter().zip(fresh);
            for slot in out.iter_mut().filter(|s| s.is_none()) {
                let (pair, d) = fresh.next().expect("one result per miss");
                if let Err(e) = self.cache.insert(&pair.premise, &pair.hypothesis, d) {
                    log::warn!("cache write to {} failed: {e}", self.cache.path().display());
                }
                *slot = Some(d);
            }
        }
        Ok(out.into_iter().map(|d| d.expect("filled")).collect())
    }

    fn health(&self) -> Result<String, NliError> {
        self.inner.health()
    }
}
