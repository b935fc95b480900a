//! Embedding backends behind one interface.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use topicswitch_core::encoder::EncoderError;
use topicswitch_core::{EmbeddingVector, Encoder, EncoderConfig};

use crate::bridge::{BridgeClient, BridgeError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Bridge(#[from] BridgeError),
    #[error("backend returned vectors of different lengths ({0} and {1})")]
    InconsistentDimension(usize, usize),
}

/// Turns texts into vectors of a fixed dimension, in input order.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> Result<usize, EmbedError>;

    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError>;

    /// Short description for logs and run manifests.
    fn describe(&self) -> String;
}

/// The seeded in-process transformer encoder.
#[derive(Debug, Clone)]
pub struct BuiltinEmbedder {
    encoder: Encoder,
}

impl BuiltinEmbedder {
    pub fn new(config: EncoderConfig) -> Result<Self, EncoderError> {
        Ok(Self {
            encoder: Encoder::new(config)?,
        })
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }
}

impl Embedder for BuiltinEmbedder {
    fn dim(&self) -> Result<usize, EmbedError> {
        Ok(self.encoder.dim())
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        texts.iter().map(|t| Ok(self.encoder.encode(t)?)).collect()
    }

    fn describe(&self) -> String {
        let c = self.encoder.config();
        format!(
            "builtin(d_model={}, heads={}, layers={}, d_ff={}, vocab={}, max_tokens={}, seed={})",
            c.d_model, c.n_heads, c.n_layers, c.d_ff, c.vocab_size, c.max_tokens, c.seed
        )
    }
}

/// A remote embedding server.
#[derive(Debug)]
pub struct BridgeEmbedder {
    client: BridgeClient,
}

impl BridgeEmbedder {
    pub fn new(client: BridgeClient) -> Self {
        Self { client }
    }
}

impl Embedder for BridgeEmbedder {
    fn dim(&self) -> Result<usize, EmbedError> {
        Ok(self.client.dim()?)
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        Ok(self.client.embed(texts)?)
    }

    fn describe(&self) -> String {
        format!("bridge({})", self.client.endpoint())
    }
}

/// Which backend to build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackendConfig {
    Builtin(EncoderConfig),
    Bridge { endpoint: String, timeout_secs: f64 },
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::Builtin(EncoderConfig::default())
    }
}

impl BackendConfig {
    pub fn build(&self) -> Result<Box<dyn Embedder>, EmbedError> {
        Ok(match self {
            BackendConfig::Builtin(cfg) => Box::new(BuiltinEmbedder::new(cfg.clone())?),
            BackendConfig::Bridge { endpoint, timeout_secs } => Box::new(BridgeEmbedder::new(BridgeClient::new(
                endpoint.clone(),
                Duration::from_secs_f64(*timeout_secs),
            ))),
        })
    }
}
