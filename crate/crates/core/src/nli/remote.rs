//! HTTP client for an out-of-process inference server.
//!
//! Protocol:
//!
//! - `POST /v1/classify` with `{"pairs":[{"id","premise","hypothesis"}]}`,
//!   answered by `{"model_id","results":[{"id","contradiction","entailment","neutral"}]}`
//!   in request order.
//! - `GET /v1/health` answered by `{"status":"ok","model_id"}`.
//!
//! Texts are sent verbatim; truncation to the model's input budget is the
//! server's job.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EntailmentBackend, EntailmentDistribution, NliError, PairRequest};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyRequest {
    pub pairs: Vec<PairRequest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResult {
    pub id: String,
    pub contradiction: f64,
    pub entailment: f64,
    pub neutral: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub model_id: String,
    pub results: Vec<WireResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub model_id: String,
}

pub struct RemoteBackend {
    endpoint: String,
    agent: ureq::Agent,
    model_id: String,
}

impl RemoteBackend {
    /// Builds a client. When `model_id` is `None` the server is asked for
    /// it through the health endpoint, which also proves it is reachable.
    pub fn connect(endpoint: &str, model_id: Option<String>, timeout: Duration) -> Result<Self, NliError> {
        let agent: ureq::Agent =
            ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        let mut backend = RemoteBackend {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            agent,
            model_id: model_id.clone().unwrap_or_default(),
        };
        if model_id.is_none() {
            backend.model_id = backend.health()?;
        }
        Ok(backend)
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn transport_error(&self, err: ureq::Error) -> NliError {
        match err {
            ureq::Error::Timeout(_) => NliError::Timeout { endpoint: self.endpoint.clone() },
            ureq::Error::StatusCode(status) => NliError::Http { status },
            ureq::Error::Json(e) => NliError::Malformed(e.to_string()),
            other => NliError::Unreachable { endpoint: self.endpoint.clone(), message: other.to_string() },
        }
    }

    fn read<T: serde::de::DeserializeOwned>(
        &self,
        response: Result<ureq::http::Response<ureq::Body>, ureq::Error>,
    ) -> Result<T, NliError> {
        let mut response = response.map_err(|e| self.transport_error(e))?;
        let status = response.status().as_u16();
        if status != 200 {
            return Err(NliError::Http { status });
        }
        let body = response.body_mut().read_to_string().map_err(|e| self.transport_error(e))?;
        serde_json::from_str(&body).map_err(|e| NliError::Malformed(e.to_string()))
    }
}

impl EntailmentBackend for RemoteBackend {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn classify_batch(&self, pairs: &[PairRequest]) -> Result<Vec<EntailmentDistribution>, NliError> {
        let request = ClassifyRequest { pairs: pairs.to_vec() };
        let url = format!("{}/v1/classify", self.endpoint);
        let response: ClassifyResponse = self.read(self.agent.post(&url).send_json(&request))?;
        if response.results.len() != pairs.len() {
            return Err(NliError::Malformed(format!(
                "expected {} results, got {}",
                pairs.len(),
                response.results.len()
            )));
        }
        pairs
            .iter()
            .zip(response.results)
            .map(|(pair, r)| {
                if r.id != pair.id {
                    return Err(NliError::Malformed(format!("result id {:?} where {:?} was expected", r.id, pair.id)));
                }
                EntailmentDistribution::new(r.contradiction, r.entailment, r.neutral).map_err(|e| match e {
                    NliError::NotNormalized { detail, .. } => NliError::NotNormalized { id: r.id.clone(), detail },
                    other => other,
                })
            })
            .collect()
    }

    fn health(&self) -> Result<String, NliError> {
        let url = format!("{}/v1/health", self.endpoint);
        let health: HealthResponse = self.read(self.agent.get(&url).call())?;
        if health.status != "ok" {
            return Err(NliError::Malformed(format!("health status {:?}", health.status)));
        }
        Ok(health.model_id)
    }
}
