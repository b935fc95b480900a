use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::linear::{linear_value_grad, LinearLoss, LinearModel};
use super::mlp::{mlp_value_grad, MlpModel};
use super::{Dataset, Model, ModelError, ModelKind, TrainConfig};

/// A trained model and the full-data objective before training and after
/// every epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub model: Model,
    pub trace: Vec<f64>,
}

/// Minibatch stochastic gradient descent with a constant step size.
///
/// Each epoch visits the rows in a fresh permutation drawn from a ChaCha8
/// stream seeded with `cfg.seed`, in `⌈N / batch_size⌉` steps. For the
/// linear models a step follows the batch-mean loss gradient plus the full
/// regulariser gradient. The network objective is a sum over examples, so
/// its step follows that objective divided by `N`, which has the same
/// minimisers.
pub fn sgd_train(kind: ModelKind, data: &Dataset, cfg: &TrainConfig) -> Result<Trained, ModelError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = data.len();
    let all_rows: Vec<usize> = (0..n).collect();

    let mlp_template = match kind {
        ModelKind::Mlp => {
            let mut sizes = vec![data.n_features()];
            sizes.extend_from_slice(&cfg.hidden_layers);
            sizes.push(2);
            Some(MlpModel::seeded(sizes, cfg.activation, &mut rng)?)
        }
        _ => None,
    };
    let mut params = match &mlp_template {
        Some(m) => m.params().to_vec(),
        None => LinearModel::zeros(data.n_features()).to_params(),
    };
    let mut grad = vec![0.0; params.len()];

    let eval = |params: &[f64], rows: &[usize], grad: &mut [f64], full: bool| -> f64 {
        match (kind, &mlp_template) {
            (ModelKind::Svm, _) => linear_value_grad(LinearLoss::Hinge, params, data, rows, cfg, grad),
            (ModelKind::Logistic, _) => linear_value_grad(LinearLoss::Logistic, params, data, rows, cfg, grad),
            (ModelKind::Mlp, Some(m)) => {
                if full {
                    mlp_value_grad(m, params, data, rows, cfg, 1.0, 1.0, grad)
                } else {
                    let loss_scale = 1.0 / rows.len() as f64;
                    mlp_value_grad(m, params, data, rows, cfg, loss_scale, 1.0 / n as f64, grad)
                }
            }
            (ModelKind::Mlp, None) => unreachable!("network template is built for Mlp"),
        }
    };

    let mut scratch = vec![0.0; params.len()];
    let mut trace = Vec::with_capacity(cfg.epochs + 1);
    trace.push(eval(&params, &all_rows, &mut scratch, true));

    let mut order = all_rows.clone();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            eval(&params, batch, &mut grad, false);
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= cfg.learning_rate * g;
            }
        }
        let value = eval(&params, &all_rows, &mut scratch, true);
        if !value.is_finite() || params.iter().any(|p| !p.is_finite()) {
            return Err(ModelError::DivergenceDetected { epoch });
        }
        trace.push(value);
    }

    let model = match mlp_template {
        Some(mut m) => {
            m.params_mut().copy_from_slice(&params);
            Model::Mlp(m)
        }
        None => Model::Linear(LinearModel::from_params(&params)),
    };
    Ok(Trained { model, trace })
}
