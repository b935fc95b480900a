//! Linear classifiers: ℓ1/ℓ2-regularised hinge loss and ℓ2-regularised
//! logistic loss.
//!
//! With `fit_intercept` the bias acts as the weight of an appended constant
//! feature and is regularised like every other weight.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Dataset, ModelError, TrainConfig};
use crate::math;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn zeros(p: usize) -> Self {
        Self {
            weights: vec![0.0; p],
            bias: 0.0,
        }
    }

    pub fn score(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.weights.len() {
            return Err(ModelError::DimensionMismatch {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        Ok(math::dot(&self.weights, x) + self.bias)
    }

    pub(crate) fn to_params(&self) -> Vec<f64> {
        let mut p = self.weights.clone();
        p.push(self.bias);
        p
    }

    pub(crate) fn from_params(params: &[f64]) -> Self {
        let (w, b) = params.split_at(params.len() - 1);
        Self {
            weights: w.to_vec(),
            bias: b[0],
        }
    }
}

/// Objective value together with its (sub)gradient, shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearObjective {
    pub value: f64,
    pub gradient: LinearModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LinearLoss {
    Hinge,
    Logistic,
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Mean loss over `rows` plus the full regulariser, with gradient written
/// into `grad` (same layout as `params`: weights then bias).
pub(crate) fn linear_value_grad(
    loss: LinearLoss,
    params: &[f64],
    data: &Dataset,
    rows: &[usize],
    cfg: &TrainConfig,
    grad: &mut [f64],
) -> f64 {
    let p = params.len() - 1;
    let (w, b) = (&params[..p], params[p]);
    grad.iter_mut().for_each(|g| *g = 0.0);
    let inv_n = 1.0 / rows.len() as f64;
    let mut total = 0.0;
    for &i in rows {
        let x = data.row(i);
        let y = f64::from(data.label(i));
        let margin = y * (math::dot(w, x) + b);
        // d(loss)/d(margin)
        let slope = match loss {
            LinearLoss::Hinge => {
                total += (1.0 - margin).max(0.0);
                if margin < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            LinearLoss::Logistic => {
                total += math::softplus(-margin);
                -math::sigmoid(-margin)
            }
        };
        if slope != 0.0 {
            let c = slope * y * inv_n;
            for (g, xj) in grad[..p].iter_mut().zip(x) {
                *g += c * xj;
            }
            if cfg.fit_intercept {
                grad[p] += c;
            }
        }
    }
    let mut value = total * inv_n;

    let active = if cfg.fit_intercept { p + 1 } else { p };
    let l1 = match loss {
        LinearLoss::Hinge => cfg.l1,
        LinearLoss::Logistic => 0.0,
    };
    for j in 0..active {
        let v = params[j];
        value += 0.5 * cfg.l2 * v * v + l1 * v.abs();
        grad[j] += cfg.l2 * v + l1 * sign(v);
    }
    value
}

fn objective(loss: LinearLoss, model: &LinearModel, data: &Dataset, cfg: &TrainConfig) -> LinearObjective {
    let params = model.to_params();
    let mut grad = vec![0.0; params.len()];
    let rows: Vec<usize> = (0..data.len()).collect();
    let value = linear_value_grad(loss, &params, data, &rows, cfg, &mut grad);
    LinearObjective {
        value,
        gradient: LinearModel::from_params(&grad),
    }
}

/// `(1/N) Σ max(0, 1 − yᵢ xᵢᵀw) + (l2/2)‖w‖₂² + l1‖w‖₁`.
///
/// The subgradient uses 0 at the hinge kink and `sign(0) = 0` for ℓ1.
pub fn svm_objective(model: &LinearModel, data: &Dataset, cfg: &TrainConfig) -> LinearObjective {
    objective(LinearLoss::Hinge, model, data, cfg)
}

/// `(1/N) Σ log(1 + exp(−yᵢ xᵢᵀw)) + (l2/2)‖w‖₂²`. `cfg.l1` is ignored.
pub fn logistic_objective(model: &LinearModel, data: &Dataset, cfg: &TrainConfig) -> LinearObjective {
    objective(LinearLoss::Logistic, model, data, cfg)
}
