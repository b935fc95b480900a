//! Feed-forward network with a two-logit softmax output, trained on
//! cross-entropy plus ℓ1 and ℓ2 penalties on every parameter.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, ModelError, TrainConfig};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => math::tanh(z),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// Parameters are stored flat: for each layer its `in × out` weight matrix
/// (row-major) followed by its `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    sizes: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl MlpModel {
    /// `sizes` runs from the input width to the output width, which must
    /// be 2.
    pub fn zeros(sizes: Vec<usize>, activation: Activation) -> Result<Self, ModelError> {
        if sizes.len() < 2 || sizes.contains(&0) || sizes[sizes.len() - 1] != 2 {
            return Err(ModelError::InvalidData(
                "layer sizes must be positive and end in 2 logits",
            ));
        }
        let params = vec![0.0; param_count(&sizes)];
        Ok(Self {
            sizes,
            activation,
            params,
        })
    }

    /// Xavier-uniform weights and zero biases.
    pub fn seeded<R: Rng>(sizes: Vec<usize>, activation: Activation, rng: &mut R) -> Result<Self, ModelError> {
        let mut model = Self::zeros(sizes, activation)?;
        let mut offset = 0;
        for l in 0..model.sizes.len() - 1 {
            let (fan_in, fan_out) = (model.sizes[l], model.sizes[l + 1]);
            let limit = math::sqrt(6.0 / (fan_in + fan_out) as f64);
            for v in &mut model.params[offset..offset + fan_in * fan_out] {
                *v = rng.random_range(-limit..limit);
            }
            offset += fan_in * fan_out + fan_out;
        }
        Ok(model)
    }

    pub fn from_params(sizes: Vec<usize>, activation: Activation, params: Vec<f64>) -> Result<Self, ModelError> {
        let mut model = Self::zeros(sizes, activation)?;
        if params.len() != model.params.len() {
            return Err(ModelError::DimensionMismatch {
                expected: model.params.len(),
                got: params.len(),
            });
        }
        model.params = params;
        Ok(model)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    fn layer_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.sizes.len());
        let mut o = 0;
        offsets.push(0);
        for w in self.sizes.windows(2) {
            o += w[0] * w[1] + w[1];
            offsets.push(o);
        }
        offsets
    }

    /// Pre-activations and activations for every layer; the last entry of
    /// `activations` holds the raw logits.
    fn forward_all(&self, params: &[f64], x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let offsets = self.layer_offsets();
        let n_layers = self.sizes.len() - 1;
        let mut pre = Vec::with_capacity(n_layers);
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(n_layers + 1);
        acts.push(x.to_vec());
        for l in 0..n_layers {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &params[offsets[l]..offsets[l] + fan_in * fan_out];
            let b = &params[offsets[l] + fan_in * fan_out..offsets[l + 1]];
            let input = &acts[l];
            let mut z = b.to_vec();
            for (k, &a) in input.iter().enumerate() {
                for (zj, wkj) in z.iter_mut().zip(&w[k * fan_out..(k + 1) * fan_out]) {
                    *zj += a * wkj;
                }
            }
            let a = if l + 1 == n_layers {
                z.clone()
            } else {
                z.iter().map(|&v| self.activation.apply(v)).collect()
            };
            pre.push(z);
            acts.push(a);
        }
        (pre, acts)
    }

    /// The two output logits, `[negative class, positive class]`.
    pub fn logits(&self, x: &[f64]) -> Result<[f64; 2], ModelError> {
        if x.len() != self.n_inputs() {
            return Err(ModelError::DimensionMismatch {
                expected: self.n_inputs(),
                got: x.len(),
            });
        }
        let (_, acts) = self.forward_all(&self.params, x);
        let out = &acts[acts.len() - 1];
        Ok([out[0], out[1]])
    }
}

/// Adds one example's cross-entropy loss and gradient (scaled by `scale`).
fn accumulate_example(model: &MlpModel, params: &[f64], x: &[f64], y: i8, scale: f64, grad: &mut [f64]) -> f64 {
    let offsets = model.layer_offsets();
    let n_layers = model.sizes.len() - 1;
    let (pre, acts) = model.forward_all(params, x);
    let logits = &acts[n_layers];
    let target = usize::from(y > 0);

    let max = logits[0].max(logits[1]);
    let lse = max + math::ln(math::exp(logits[0] - max) + math::exp(logits[1] - max));
    let loss = lse - logits[target];

    // δ at the output: softmax − one-hot
    let mut delta: Vec<f64> = logits
        .iter()
        .enumerate()
        .map(|(j, &z)| math::exp(z - lse) - if j == target { 1.0 } else { 0.0 })
        .collect();

    for l in (0..n_layers).rev() {
        let (fan_in, fan_out) = (model.sizes[l], model.sizes[l + 1]);
        let w_off = offsets[l];
        let b_off = w_off + fan_in * fan_out;
        let input = &acts[l];
        for (k, &a) in input.iter().enumerate() {
            for (j, &d) in delta.iter().enumerate() {
                grad[w_off + k * fan_out + j] += scale * a * d;
            }
        }
        for (j, &d) in delta.iter().enumerate() {
            grad[b_off + j] += scale * d;
        }
        if l > 0 {
            let w = &params[w_off..b_off];
            let mut prev = vec![0.0; fan_in];
            for (k, p) in prev.iter_mut().enumerate() {
                let back: f64 = delta
                    .iter()
                    .zip(&w[k * fan_out..(k + 1) * fan_out])
                    .map(|(d, w)| d * w)
                    .sum();
                *p = back * model.activation.derivative(pre[l - 1][k], acts[l][k]);
            }
            delta = prev;
        }
    }
    loss
}

/// `loss_scale · Σ_{i∈rows} ℓ(f(xᵢ), yᵢ) + reg_scale · (l1‖θ‖₁ + (l2/2)‖θ‖₂²)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn mlp_value_grad(
    model: &MlpModel,
    params: &[f64],
    data: &Dataset,
    rows: &[usize],
    cfg: &TrainConfig,
    loss_scale: f64,
    reg_scale: f64,
    grad: &mut [f64],
) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for &i in rows {
        loss += accumulate_example(model, params, data.row(i), data.label(i), loss_scale, grad);
    }
    let mut value = loss_scale * loss;
    for (g, &v) in grad.iter_mut().zip(params) {
        let s = if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        };
        value += reg_scale * (cfg.l1 * v.abs() + 0.5 * cfg.l2 * v * v);
        *g += reg_scale * (cfg.l1 * s + cfg.l2 * v);
    }
    value
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpObjective {
    pub value: f64,
    /// Same layout as [`MlpModel::params`].
    pub gradient: Vec<f64>,
}

/// `Σᵢ ℓ(f_θ(xᵢ), yᵢ) + l1‖θ‖₁ + (l2/2)‖θ‖₂²` with softmax cross-entropy
/// over two logits, differentiated by backpropagation.
pub fn mlp_objective(model: &MlpModel, data: &Dataset, cfg: &TrainConfig) -> Result<MlpObjective, ModelError> {
    if data.n_features() != model.n_inputs() {
        return Err(ModelError::DimensionMismatch {
            expected: model.n_inputs(),
            got: data.n_features(),
        });
    }
    let rows: Vec<usize> = (0..data.len()).collect();
    let mut gradient = vec![0.0; model.params.len()];
    let value = mlp_value_grad(model, &model.params, data, &rows, cfg, 1.0, 1.0, &mut gradient);
    Ok(MlpObjective { value, gradient })
}
