//! Deterministic transformer encoder used as the built-in embedding backend.
//!
//! The weights are drawn once from a seeded ChaCha stream and never trained.
//! Each layer is multi-head self-attention followed by a position-wise
//! feed-forward network, each wrapped in a residual connection and layer
//! normalisation. Token outputs are pooled into one vector per text.

mod attention;
pub mod tokenize;

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use attention::{
    attention_weights, layer_norm, multi_head_attention, position_wise_ffn, scaled_dot_product_attention, softmax_rows,
};

use crate::math::{self, Matrix};

pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncoderError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(&'static str),
    #[error("text is empty")]
    EmptyText,
    #[error("invalid encoder configuration: {0}")]
    InvalidConfig(&'static str),
}

/// A fixed-width text embedding with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("embedding contains a non-finite entry")]
pub struct NonFiniteEmbedding;

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, NonFiniteEmbedding> {
        if values.iter().all(|v| v.is_finite()) {
            Ok(Self(values))
        } else {
            Err(NonFiniteEmbedding)
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Element-wise mean of equally sized vectors. `None` if `vectors` is
    /// empty or the widths differ.
    pub fn mean_of(vectors: &[EmbeddingVector]) -> Option<EmbeddingVector> {
        let dim = vectors.first()?.dim();
        let mut acc = vec![0.0; dim];
        for v in vectors {
            if v.dim() != dim {
                return None;
            }
            for (a, x) in acc.iter_mut().zip(v.values()) {
                *a += x;
            }
        }
        let n = vectors.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        Some(EmbeddingVector(acc))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    #[default]
    Mean,
    FirstToken,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub d_ff: usize,
    pub vocab_size: usize,
    pub max_tokens: usize,
    pub seed: u64,
    #[serde(default)]
    pub pooling: Pooling,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            d_model: 64,
            n_heads: 4,
            n_layers: 2,
            d_ff: 128,
            vocab_size: 4096,
            max_tokens: 256,
            seed: 0,
            pooling: Pooling::Mean,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), EncoderError> {
        if self.d_model == 0 || self.n_heads == 0 || self.n_layers == 0 || self.d_ff == 0 {
            return Err(EncoderError::InvalidConfig("dimensions must be positive"));
        }
        if self.vocab_size == 0 || self.max_tokens == 0 {
            return Err(EncoderError::InvalidConfig(
                "vocab_size and max_tokens must be positive",
            ));
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return Err(EncoderError::InvalidConfig("n_heads must divide d_model"));
        }
        Ok(())
    }

    pub fn d_k(&self) -> usize {
        self.d_model / self.n_heads
    }
}

/// Query, key and value projections of one attention head (`d_model × d_k`).
#[derive(Debug, Clone, PartialEq)]
pub struct HeadWeights {
    pub w_q: Matrix,
    pub w_k: Matrix,
    pub w_v: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    pub heads: Vec<HeadWeights>,
    /// `d_model × d_model`
    pub w_o: Matrix,
    /// `d_model × d_ff`
    pub w1: Matrix,
    pub b1: Vec<f64>,
    /// `d_ff × d_model`
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderWeights {
    /// `vocab_size × d_model`
    pub token_embedding: Matrix,
    pub layers: Vec<LayerWeights>,
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, limit: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-limit..limit)).collect();
    Matrix::from_vec(rows, cols, data)
}

fn xavier(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Matrix {
    let limit = math::sqrt(6.0 / (fan_in + fan_out) as f64);
    uniform_matrix(rng, fan_in, fan_out, limit)
}

impl EncoderWeights {
    /// Draws all weights from a ChaCha8 stream seeded with `config.seed`.
    /// Token embeddings have unit variance, projections are Xavier-uniform
    /// and biases start at zero.
    pub fn seeded(config: &EncoderConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let d = config.d_model;
        let token_embedding = uniform_matrix(&mut rng, config.vocab_size, d, math::sqrt(3.0));
        let layers = (0..config.n_layers)
            .map(|_| {
                let heads = (0..config.n_heads)
                    .map(|_| HeadWeights {
                        w_q: xavier(&mut rng, d, config.d_k()),
                        w_k: xavier(&mut rng, d, config.d_k()),
                        w_v: xavier(&mut rng, d, config.d_k()),
                    })
                    .collect();
                LayerWeights {
                    heads,
                    w_o: xavier(&mut rng, d, d),
                    w1: xavier(&mut rng, d, config.d_ff),
                    b1: vec![0.0; config.d_ff],
                    w2: xavier(&mut rng, config.d_ff, d),
                    b2: vec![0.0; d],
                }
            })
            .collect();
        Self {
            token_embedding,
            layers,
        }
    }
}

/// Sinusoidal position encoding for one position.
pub fn position_encoding(pos: usize, d_model: usize) -> Vec<f64> {
    (0..d_model)
        .map(|j| {
            let pair = (j / 2 * 2) as f64;
            let angle = pos as f64 / math::powf(10_000.0, pair / d_model as f64);
            if j % 2 == 0 {
                math::sin(angle)
            } else {
                math::cos(angle)
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Encoder {
    config: EncoderConfig,
    weights: EncoderWeights,
}

impl Encoder {
    pub fn new(config: EncoderConfig) -> Result<Self, EncoderError> {
        config.validate()?;
        let weights = EncoderWeights::seeded(&config);
        Ok(Self { config, weights })
    }

    /// Uses caller-supplied weights. Shapes are checked lazily in `forward`.
    pub fn with_weights(config: EncoderConfig, weights: EncoderWeights) -> Result<Self, EncoderError> {
        config.validate()?;
        Ok(Self { config, weights })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn weights(&self) -> &EncoderWeights {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.config.d_model
    }

    /// Input matrix for a token sequence: scaled token embedding plus
    /// position encoding.
    pub fn embed_tokens(&self, tokens: &[usize]) -> Matrix {
        let d = self.config.d_model;
        let scale = math::sqrt(d as f64);
        let mut x = Matrix::zeros(tokens.len(), d);
        for (pos, &tok) in tokens.iter().enumerate() {
            let pe = position_encoding(pos, d);
            let emb = self.weights.token_embedding.row(tok % self.config.vocab_size);
            for ((o, e), p) in x.row_mut(pos).iter_mut().zip(emb).zip(&pe) {
                *o = e * scale + p;
            }
        }
        x
    }

    /// Runs every layer over a token sequence and returns the per-position
    /// outputs.
    pub fn forward(&self, tokens: &[usize]) -> Result<Matrix, EncoderError> {
        let mut x = self.embed_tokens(tokens);
        for layer in &self.weights.layers {
            let attn = multi_head_attention(&x, layer)?;
            if attn.shape() != x.shape() {
                return Err(EncoderError::ShapeMismatch("W^O does not map back to d_model"));
            }
            for (a, b) in x.as_mut_slice().iter_mut().zip(attn.as_slice()) {
                *a += b;
            }
            layer_norm(&mut x, LAYER_NORM_EPS);
            for i in 0..x.rows() {
                let ff = position_wise_ffn(x.row(i), layer)?;
                if ff.len() != x.cols() {
                    return Err(EncoderError::ShapeMismatch("FFN output width differs from d_model"));
                }
                for (a, b) in x.row_mut(i).iter_mut().zip(&ff) {
                    *a += b;
                }
            }
            layer_norm(&mut x, LAYER_NORM_EPS);
        }
        Ok(x)
    }

    fn pool(&self, hidden: &Matrix) -> Vec<f64> {
        match self.config.pooling {
            Pooling::FirstToken => hidden.row(0).to_vec(),
            Pooling::Mean => {
                let mut acc = vec![0.0; hidden.cols()];
                for i in 0..hidden.rows() {
                    for (a, v) in acc.iter_mut().zip(hidden.row(i)) {
                        *a += v;
                    }
                }
                let n = hidden.rows() as f64;
                acc.iter_mut().for_each(|a| *a /= n);
                acc
            }
        }
    }

    /// Embeds one text.
    ///
    /// Texts longer than `max_tokens` are split into consecutive chunks whose
    /// pooled vectors are averaged with equal weight. A non-blank text that
    /// contains no alphanumeric token encodes to the zero vector.
    pub fn encode(&self, text: &str) -> Result<EmbeddingVector, EncoderError> {
        if text.trim().is_empty() {
            return Err(EncoderError::EmptyText);
        }
        let tokens = tokenize::tokenize(text, self.config.vocab_size);
        if tokens.is_empty() {
            return Ok(EmbeddingVector::zeros(self.dim()));
        }
        let pooled: Vec<EmbeddingVector> = tokens
            .chunks(self.config.max_tokens)
            .map(|chunk| self.forward(chunk).map(|h| EmbeddingVector(self.pool(&h))))
            .collect::<Result<_, _>>()?;
        let mean = EmbeddingVector::mean_of(&pooled).ok_or(EncoderError::ShapeMismatch("chunk widths differ"))?;
        if mean.values().iter().all(|v| v.is_finite()) {
            Ok(mean)
        } else {
            Err(EncoderError::ShapeMismatch("non-finite encoder output"))
        }
    }
}
