//! Entailment classifier abstraction.
//!
//! The metric only needs P(entailment) for an ordered (premise, hypothesis)
//! pair. Backends implement [`EntailmentBackend`]; this module adds the
//! request validation, response re-validation and concurrent batch fan-out
//! shared by all of them.

mod cache;
mod mock;
mod remote;

use std::collections::HashSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{Cache, CachedBackend};
pub use mock::{mock_classify, MockBackend, MOCK_MODEL_ID};
pub use remote::{ClassifyRequest, ClassifyResponse, HealthResponse, RemoteBackend, WireResult};

/// Tolerance on the sum of the three label probabilities.
pub const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum NliError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("duplicate pair id {0:?} in batch")]
    DuplicateId(String),
    #[error("pair {0:?} has empty text")]
    EmptyText(String),
    #[error("hypothesis has no tokens")]
    EmptyHypothesis,
    #[error("remote backend requires an endpoint")]
    MissingEndpoint,
    #[error("backend unreachable at {endpoint}: {message}")]
    Unreachable { endpoint: String, message: String },
    #[error("request to {endpoint} timed out")]
    Timeout { endpoint: String },
    #[error("backend returned HTTP {status}")]
    Http { status: u16 },
    #[error("malformed backend response: {0}")]
    Malformed(String),
    #[error("distribution for {id:?} is not normalized: {detail}")]
    NotNormalized { id: String, detail: String },
    #[error("batch failed for pairs [{}]: {source}", .failed_ids.join(", "))]
    BatchFailed {
        failed_ids: Vec<String>,
        #[source]
        source: Box<NliError>,
    },
    #[error("cache: {0}")]
    Cache(#[from] std::io::Error),
}

impl NliError {
    /// True when the failure is in the transport or the server rather than
    /// in the request the caller built.
    pub fn is_backend_failure(&self) -> bool {
        match self {
            NliError::Unreachable { .. }
            | NliError::Timeout { .. }
            | NliError::Http { .. }
            | NliError::Malformed(_)
            | NliError::NotNormalized { .. }
            | NliError::MissingEndpoint
            | NliError::Cache(_) => true,
            NliError::BatchFailed { source, .. } => source.is_backend_failure(),
            NliError::EmptyBatch | NliError::DuplicateId(_) | NliError::EmptyText(_) | NliError::EmptyHypothesis => {
                false
            }
        }
    }
}

/// Classifier posterior over the three NLI labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntailmentDistribution {
    pub contradiction: f64,
    pub entailment: f64,
    pub neutral: f64,
}

impl EntailmentDistribution {
    pub fn new(contradiction: f64, entailment: f64, neutral: f64) -> Result<Self, NliError> {
        let d = EntailmentDistribution { contradiction, entailment, neutral };
        d.check("").map(|()| d)
    }

    fn check(&self, id: &str) -> Result<(), NliError> {
        let parts = [self.contradiction, self.entailment, self.neutral];
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(NliError::NotNormalized {
                id: id.to_string(),
                detail: format!("component outside [0, 1]: {parts:?}"),
            });
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(NliError::NotNormalized { id: id.to_string(), detail: format!("sum {sum}") });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRequest {
    pub id: String,
    pub premise: String,
    pub hypothesis: String,
}

impl PairRequest {
    pub fn new(id: impl Into<String>, premise: impl Into<String>, hypothesis: impl Into<String>) -> Self {
        PairRequest { id: id.into(), premise: premise.into(), hypothesis: hypothesis.into() }
    }
}

/// An entailment classifier. `classify_batch` is the single transport
/// primitive; results must come back in request order.
pub trait EntailmentBackend: Send + Sync {
    fn model_id(&self) -> &str;

    fn classify_batch(&self, pairs: &[PairRequest]) -> Result<Vec<EntailmentDistribution>, NliError>;

    /// Liveness probe; returns the model id the backend reports.
    fn health(&self) -> Result<String, NliError> {
        Ok(self.model_id().to_string())
    }
}

impl<B: EntailmentBackend + ?Sized> EntailmentBackend for &B {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }
    fn classify_batch(&self, pairs: &[PairRequest]) -> Result<Vec<EntailmentDistribution>, NliError> {
        (**self).classify_batch(pairs)
    }
    fn health(&self) -> Result<String, NliError> {
        (**self).health()
    }
}

impl<B: EntailmentBackend + ?Sized> EntailmentBackend for Box<B> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }
    fn classify_batch(&self, pairs: &[PairRequest]) -> Result<Vec<EntailmentDistribution>, NliError> {
        (**self).classify_batch(pairs)
    }
    fn health(&self) -> Result<String, NliError> {
        (**self).health()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Remote,
    Mock,
}

/// Which classifier to talk to and how.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    /// Cache-key component. For remote backends `None` means "ask the
    /// server via /v1/health".
    pub model_id: Option<String>,
    pub timeout: Duration,
}

impl BackendDescriptor {
    pub fn mock() -> Self {
        BackendDescriptor { kind: BackendKind::Mock, endpoint: None, model_id: None, timeout: Duration::from_secs(30) }
    }

    pub fn remote(endpoint: impl Into<String>) -> Self {
        BackendDescriptor {
            kind: BackendKind::Remote,
            endpoint: Some(endpoint.into()),
            model_id: None,
            timeout: Duration::from_secs(30),
        }
    }

    pub fn connect(&self) -> Result<Box<dyn EntailmentBackend>, NliError> {
        match self.kind {
            BackendKind::Mock => Ok(Box::new(MockBackend::new())),
            BackendKind::Remote => {
                let endpoint = self.endpoint.as_deref().ok_or(NliError::MissingEndpoint)?;
                Ok(Box::new(RemoteBackend::connect(endpoint, self.model_id.clone(), self.timeout)?))
            }
        }
    }
}

fn check_requests(pairs: &[PairRequest]) -> Result<(), NliError> {
    if pairs.is_empty() {
        return Err(NliError::EmptyBatch);
    }
    let mut ids = HashSet::with_capacity(pairs.len());
    for pair in pairs {
        if !ids.insert(pair.id.as_str()) {
            return Err(NliError::DuplicateId(pair.id.clone()));
        }
        if pair.premise.trim().is_empty() || pair.hypothesis.trim().is_empty() {
            return Err(NliError::EmptyText(pair.id.clone()));
        }
    }
    Ok(())
}

fn check_results(pairs: &[PairRequest], results: &[EntailmentDistribution]) -> Result<(), NliError> {
    if results.len() != pairs.len() {
        return Err(NliError::Malformed(format!("expected {} results, got {}", pairs.len(), results.len())));
    }
    pairs.iter().zip(results).try_for_each(|(p, d)| d.check(&p.id))
}

/// Classifies one ordered pair.
pub fn classify_pair<B: EntailmentBackend + ?Sized>(
    premise: &str,
    hypothesis: &str,
    backend: &B,
) -> Result<EntailmentDistribution, NliError> {
    let pairs = [PairRequest::new("p0", premise, hypothesis)];
    classify_batch(&pairs, backend).map(|mut v| v.remove(0))
}

/// Classifies a batch in a single transport call. Requests are checked
/// before anything is sent and every returned distribution is re-validated.
pub fn classify_batch<B: EntailmentBackend + ?Sized>(
    pairs: &[PairRequest],
    backend: &B,
) -> Result<Vec<EntailmentDistribution>, NliError> {
    check_requests(pairs)?;
    let results = backend.classify_batch(pairs)?;
    check_results(pairs, &results)?;
    Ok(results)
}

/// Transport batching for [`classify_batch_concurrent`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchOptions {
    /// Pairs per transport call.
    pub batch_size: usize,
    /// Maximum transport calls in flight.
    pub concurrency: usize,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions { batch_size: 32, concurrency: 4 }
    }
}

/// Splits `pairs` into transport batches and runs up to
/// `options.concurrency` of them at once. Output order always matches input
/// order. If any sub-batch fails, the whole call fails and lists the ids of
/// every failed sub-batch.
pub fn classify_batch_concurrent<B: EntailmentBackend + ?Sized>(
    pairs: &[PairRequest],
    backend: &B,
    options: BatchOptions,
) -> Result<Vec<EntailmentDistribution>, NliError> {
    check_requests(pairs)?;
    let chunks: Vec<&[PairRequest]> = pairs.chunks(options.batch_size.max(1)).collect();
    let workers = options.concurrency.max(1).min(chunks.len());

    let mut slots: Vec<Option<Result<Vec<EntailmentDistribution>, NliError>>> =
        (0..chunks.len()).map(|_| None).collect();

    if workers <= 1 {
        for (slot, chunk) in slots.iter_mut().zip(&chunks) {
            *slot = Some(run_chunk(chunk, backend));
        }
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let finished = std::sync::Mutex::new(Vec::with_capacity(chunks.len()));
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    let Some(chunk) = chunks.get(i) else { break };
                    let result = run_chunk(chunk, backend);
                    finished.lock().expect("result lock").push((i, result));
                });
            }
        });
        for (i, result) in finished.into_inner().expect("result lock") {
            slots[i] = Some(result);
        }
    }

    let mut out = Vec::with_capacity(pairs.len());
    let mut failed_ids = Vec::new();
    let mut first_error = None;
    for (slot, chunk) in slots.into_iter().zip(&chunks) {
        match slot.expect("every chunk ran") {
            Ok(results) => out.extend(results),
            Err(e) => {
                failed_ids.extend(chunk.iter().map(|p| p.id.clone()));
                first_error.get_or_insert(e);
            }
        }
    }
    match first_error {
        None => Ok(out),
        Some(source) => Err(NliError::BatchFailed { failed_ids, source: Box::new(source) }),
    }
}

fn run_chunk<B: EntailmentBackend + ?Sized>(
    chunk: &[PairRequest],
    backend: &B,
) -> Result<Vec<EntailmentDistribution>, NliError> {
    let results = backend.classify_batch(chunk)?;
    check_results(chunk, &results)?;
    Ok(results)
}
