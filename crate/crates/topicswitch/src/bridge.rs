//! HTTP client for a remote embedding server.
//!
//! Wire protocol:
//!
//! * `GET /health` → `{"status": "ok", "dim": int, "model": string}`
//! * `POST /embed` with `{"texts": [...]}` → `{"vectors": [[f64, ...], ...], "dim": int}`
//!
//! Any non-200 status or a body that does not match this schema is a
//! protocol error. Requests are split into batches of at most
//! [`BridgeClient::batch_size`] texts and results are returned in input
//! order.

use std::sync::OnceLock;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use topicswitch_core::EmbeddingVector;

pub const DEFAULT_BATCH_SIZE: usize = 64;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BridgeError {
    #[error("embedding server unreachable at {endpoint}: {reason}")]
    BridgeUnreachable { endpoint: String, reason: String },
    #[error("embedding server protocol error: {0}")]
    BridgeProtocolError(String),
    #[error("embedding dimension mismatch: server declared {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub dim: usize,
    pub model: String,
}

#[derive(Debug, Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Debug, Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
    dim: usize,
}

#[derive(Debug)]
pub struct BridgeClient {
    endpoint: String,
    agent: ureq::Agent,
    batch_size: usize,
    dim: OnceLock<usize>,
}

impl BridgeClient {
    /// `endpoint` is the server's base URL, e.g. `http://127.0.0.1:8000`.
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            agent,
            batch_size: DEFAULT_BATCH_SIZE,
            dim: OnceLock::new(),
        }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    fn classify(&self, e: ureq::Error) -> BridgeError {
        match e {
            ureq::Error::Io(_)
            | ureq::Error::Timeout(_)
            | ureq::Error::HostNotFound
            | ureq::Error::ConnectionFailed => BridgeError::BridgeUnreachable {
                endpoint: self.endpoint.clone(),
                reason: e.to_string(),
            },
            other => BridgeError::BridgeProtocolError(other.to_string()),
        }
    }

    fn read_body<T: serde::de::DeserializeOwned>(
        &self,
        result: Result<ureq::http::Response<ureq::Body>, ureq::Error>,
    ) -> Result<T, BridgeError> {
        let mut resp = result.map_err(|e| self.classify(e))?;
        let status = resp.status().as_u16();
        if status != 200 {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(BridgeError::BridgeProtocolError(format!(
                "HTTP {status}: {}",
                body.trim()
            )));
        }
        resp.body_mut()
            .read_json::<T>()
            .map_err(|e| BridgeError::BridgeProtocolError(format!("invalid response body: {e}")))
    }

    pub fn health(&self) -> Result<Health, BridgeError> {
        let health: Health = self.read_body(self.agent.get(format!("{}/health", self.endpoint)).call())?;
        if health.status != "ok" {
            return Err(BridgeError::BridgeProtocolError(format!(
                "server status `{}`",
                health.status
            )));
        }
        if health.dim == 0 {
            return Err(BridgeError::BridgeProtocolError("server declared dimension 0".into()));
        }
        Ok(health)
    }

    /// The dimension declared by `/health`, fetched once and cached.
    pub fn dim(&self) -> Result<usize, BridgeError> {
        if let Some(d) = self.dim.get() {
            return Ok(*d);
        }
        let d = self.health()?.dim;
        Ok(*self.dim.get_or_init(|| d))
    }

    /// Embeds `texts` in order. An empty input returns an empty output
    /// without contacting the server.
    pub fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, BridgeError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let dim = self.dim()?;
        let mut out = Vec::with_capacity(texts.len());
        for batch in texts.chunks(self.batch_size) {
            let resp: EmbedResponse = self.read_body(
                self.agent
                    .post(format!("{}/embed", self.endpoint))
                    .send_json(EmbedRequest { texts: batch }),
            )?;
            if resp.dim != dim {
                return Err(BridgeError::DimensionMismatch {
                    expected: dim,
                    got: resp.dim,
                });
            }
            if resp.vectors.len() != batch.len() {
                return Err(BridgeError::BridgeProtocolError(format!(
                    "sent {} texts, received {} vectors",
                    batch.len(),
                    resp.vectors.len()
                )));
            }
            for v in resp.vectors {
                if v.len() != dim {
                    return Err(BridgeError::DimensionMismatch {
                        expected: dim,
                        got: v.len(),
                    });
                }
                let v = EmbeddingVector::new(v)
                    .map_err(|_| BridgeError::BridgeProtocolError("vector contains a non-finite value".into()))?;
                out.push(v);
            }
        }
        Ok(out)
    }
}
