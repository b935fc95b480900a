use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::math::{self, Matrix};

/// Feature rows with ±1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<i8>,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<i8>) -> Result<Self, ModelError> {
        if features.rows() == 0 {
            return Err(ModelError::EmptyDataset);
        }
        if features.cols() == 0 {
            return Err(ModelError::InvalidData("dataset has no features"));
        }
        if features.rows() != labels.len() {
            return Err(ModelError::DimensionMismatch {
                expected: features.rows(),
                got: labels.len(),
            });
        }
        if !features.is_finite() {
            return Err(ModelError::InvalidData("non-finite feature"));
        }
        if labels.iter().any(|&y| y != 1 && y != -1) {
            return Err(ModelError::InvalidData("labels must be -1 or +1"));
        }
        Ok(Self { features, labels })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], labels: Vec<i8>) -> Result<Self, ModelError> {
        if rows.is_empty() {
            return Err(ModelError::EmptyDataset);
        }
        let width = rows[0].as_ref().len();
        if let Some(bad) = rows.iter().find(|r| r.as_ref().len() != width) {
            return Err(ModelError::DimensionMismatch {
                expected: width,
                got: bad.as_ref().len(),
            });
        }
        Self::new(Matrix::from_rows(rows), labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn label(&self, i: usize) -> i8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }
}

/// Per-feature z-score statistics, fitted on a training split only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Population standard deviations; zero spreads are stored as 1.
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &Dataset) -> Self {
        let n = data.len() as f64;
        let p = data.n_features();
        let mut means = alloc::vec![0.0; p];
        for i in 0..data.len() {
            for (m, x) in means.iter_mut().zip(data.row(i)) {
                *m += x;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = alloc::vec![0.0; p];
        for i in 0..data.len() {
            for ((v, x), m) in vars.iter_mut().zip(data.row(i)).zip(&means) {
                *v += (x - m) * (x - m);
            }
        }
        let stds = vars
            .into_iter()
            .map(|v| {
                let s = math::sqrt(v / n);
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self { means, stds }
    }

    pub fn transform_row(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.means)
            .zip(&self.stds)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset, ModelError> {
        if data.n_features() != self.means.len() {
            return Err(ModelError::DimensionMismatch {
                expected: self.means.len(),
                got: data.n_features(),
            });
        }
        let rows: Vec<Vec<f64>> = (0..data.len()).map(|i| self.transform_row(data.row(i))).collect();
        Dataset::from_rows(&rows, data.labels().to_vec())
    }
}
