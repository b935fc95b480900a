//! Attention and feed-forward building blocks of the encoder.

use alloc::vec::Vec;

use super::{EncoderError, LayerWeights};
use crate::math::{self, Matrix};

/// Row-wise softmax, shifted by each row's maximum.
pub fn softmax_rows(scores: &Matrix) -> Matrix {
    let mut out = scores.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = math::exp(*v - max);
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// `softmax(Q Kᵀ / √d_k)`, the attention matrix.
pub fn attention_weights(q: &Matrix, k: &Matrix) -> Result<Matrix, EncoderError> {
    if q.cols() != k.cols() || q.cols() == 0 {
        return Err(EncoderError::ShapeMismatch("query and key widths differ"));
    }
    let scale = math::sqrt(q.cols() as f64);
    let mut scores = q
        .matmul(&k.transpose())
        .ok_or(EncoderError::ShapeMismatch("query and key widths differ"))?;
    for v in scores.as_mut_slice() {
        *v /= scale;
    }
    Ok(softmax_rows(&scores))
}

/// `softmax(Q Kᵀ / √d_k) V`.
pub fn scaled_dot_product_attention(q: &Matrix, k: &Matrix, v: &Matrix) -> Result<Matrix, EncoderError> {
    if k.rows() != v.rows() {
        return Err(EncoderError::ShapeMismatch("keys and values have different lengths"));
    }
    let a = attention_weights(q, k)?;
    a.matmul(v)
        .ok_or(EncoderError::ShapeMismatch("keys and values have different lengths"))
}

/// Projects `x` per head, attends, concatenates the heads and applies `W^O`.
pub fn multi_head_attention(x: &Matrix, layer: &LayerWeights) -> Result<Matrix, EncoderError> {
    let d_model = layer.w_o.rows();
    if x.cols() != d_model {
        return Err(EncoderError::ShapeMismatch("input width differs from d_model"));
    }
    let proj = |w: &Matrix| {
        x.matmul(w)
            .ok_or(EncoderError::ShapeMismatch("projection shape differs from d_model"))
    };
    let heads: Vec<Matrix> = layer
        .heads
        .iter()
        .map(|h| scaled_dot_product_attention(&proj(&h.w_q)?, &proj(&h.w_k)?, &proj(&h.w_v)?))
        .collect::<Result<_, _>>()?;

    let concat_width: usize = heads.iter().map(Matrix::cols).sum();
    let mut concat = Matrix::zeros(x.rows(), concat_width);
    for i in 0..x.rows() {
        let mut offset = 0;
        for h in &heads {
            concat.row_mut(i)[offset..offset + h.cols()].copy_from_slice(h.row(i));
            offset += h.cols();
        }
    }
    concat
        .matmul(&layer.w_o)
        .ok_or(EncoderError::ShapeMismatch("concatenated heads do not match W^O"))
}

/// `ReLU(x W₁ + b₁) W₂ + b₂` for one position.
pub fn position_wise_ffn(x: &[f64], layer: &LayerWeights) -> Result<Vec<f64>, EncoderError> {
    let mut hidden = layer
        .w1
        .vecmul(x)
        .ok_or(EncoderError::ShapeMismatch("FFN input width differs from d_model"))?;
    for (h, b) in hidden.iter_mut().zip(&layer.b1) {
        *h = (*h + b).max(0.0);
    }
    let mut out = layer
        .w2
        .vecmul(&hidden)
        .ok_or(EncoderError::ShapeMismatch("FFN inner width mismatch"))?;
    for (o, b) in out.iter_mut().zip(&layer.b2) {
        *o += b;
    }
    Ok(out)
}

/// Normalises each row to zero mean and unit variance (no learned gain).
pub fn layer_norm(x: &mut Matrix, eps: f64) {
    for i in 0..x.rows() {
        let row = x.row_mut(i);
        let n = row.len() as f64;
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let inv = 1.0 / math::sqrt(var + eps);
        for v in row.iter_mut() {
            *v = (*v - mean) * inv;
        }
    }
}
