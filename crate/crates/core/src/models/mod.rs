//! Regularised classifiers trained with stochastic gradient descent.
//!
//! Three objectives are available:
//!
//! * [`svm_objective`]: mean hinge loss with ℓ2 and ℓ1 penalties,
//! * [`logistic_objective`]: mean logistic loss with an ℓ2 penalty,
//! * [`mlp_objective`]: summed softmax cross-entropy of a small network with
//!   ℓ1 and ℓ2 penalties on all parameters.
//!
//! All three predict `+1` when the positive-class score is at least the
//! negative one, matching the `≥` convention of the labels.

mod dataset;
mod linear;
mod mlp;
mod sgd;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

pub use dataset::{Dataset, Standardizer};
pub use linear::{logistic_objective, svm_objective, LinearModel, LinearObjective};
pub use mlp::{mlp_objective, Activation, MlpModel, MlpObjective};
pub use sgd::{sgd_train, Trained};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid data: {0}")]
    InvalidData(&'static str),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("objective became non-finite in epoch {epoch}; lower the learning rate")]
    DivergenceDetected { epoch: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Svm,
    Logistic,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Svm, ModelKind::Logistic, ModelKind::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Svm => "svm",
            ModelKind::Logistic => "logistic",
            ModelKind::Mlp => "nn",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "svm" => Ok(ModelKind::Svm),
            "logistic" | "logreg" => Ok(ModelKind::Logistic),
            "nn" | "mlp" => Ok(ModelKind::Mlp),
            _ => Err(ModelError::InvalidConfig("unknown model kind")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// ℓ1 penalty strength (hinge and network objectives).
    pub l1: f64,
    /// ℓ2 penalty strength (all objectives).
    pub l2: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Learn a bias as the weight of an appended constant feature.
    pub fit_intercept: bool,
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            l1: 0.0,
            l2: 1e-3,
            learning_rate: 0.05,
            epochs: 200,
            batch_size: 16,
            seed: 0,
            fit_intercept: true,
            hidden_layers: vec![8],
            activation: Activation::Relu,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.l1 >= 0.0 && self.l1.is_finite() && self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(ModelError::InvalidConfig("penalties must be finite and non-negative"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::InvalidConfig("learning rate must be positive"));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(ModelError::InvalidConfig("epochs and batch size must be positive"));
        }
        if self.hidden_layers.contains(&0) {
            return Err(ModelError::InvalidConfig("hidden layers must be non-empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Model {
    Linear(LinearModel),
    Mlp(MlpModel),
}

impl Model {
    pub fn n_inputs(&self) -> usize {
        match self {
            Model::Linear(m) => m.weights.len(),
            Model::Mlp(m) => m.n_inputs(),
        }
    }

    /// Positive-class margin: `xᵀw + b`, or the logit difference.
    pub fn decision(&self, x: &[f64]) -> Result<f64, ModelError> {
        match self {
            Model::Linear(m) => m.score(x),
            Model::Mlp(m) => m.logits(x).map(|[neg, pos]| pos - neg),
        }
    }
}

/// Sign of the decision value, with ties going to +1.
pub fn predict(model: &Model, x: &[f64]) -> Result<i8, ModelError> {
    match model {
        Model::Linear(m) => m.score(x).map(|s| if s >= 0.0 { 1 } else { -1 }),
        Model::Mlp(m) => m.logits(x).map(|[neg, pos]| if pos >= neg { 1 } else { -1 }),
    }
}

pub fn predict_all(model: &Model, data: &Dataset) -> Result<Vec<i8>, ModelError> {
    (0..data.len()).map(|i| predict(model, data.row(i))).collect()
}

/// Fraction of rows whose prediction equals the label.
pub fn evaluate_accuracy(model: &Model, test: &Dataset) -> Result<f64, ModelError> {
    if test.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let predictions = predict_all(model, test)?;
    let correct = predictions.iter().zip(test.labels()).filter(|(p, y)| p == y).count();
    Ok(correct as f64 / test.len() as f64)
}
