use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{DecoderError, GaussianPrior};
use crate::features::{FeatureVector, FEATURE_DIM};

/// Design-matrix width: sixteen features plus a constant bias column.
pub const MODEL_DIM: usize = FEATURE_DIM + 1;

/// Regression weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: DVector<f64>,
}

impl LinearModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum()
    }
}

/// Identifies the subject, day and strategy a task belongs to.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TaskId {
    pub subject: String,
    pub day: u8,
    pub strategy: String,
}

/// Trials of one subject/day/strategy as a design matrix and targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub id: TaskId,
}

impl TaskDataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, id: TaskId) -> Result<Self, DecoderError> {
        if x.nrows() != y.len() {
            return Err(DecoderError::LengthMismatch { left: x.nrows(), right: y.len() });
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(DecoderError::NonFinite);
        }
        Ok(Self { x, y, id })
    }

    /// Stacks feature vectors into a design matrix with a trailing bias
    /// column; targets are the ±1 labels.
    pub fn from_features(vectors: &[FeatureVector]) -> Result<Self, DecoderError> {
        let first = vectors.first().ok_or(DecoderError::Empty)?;
        let id = TaskId { subject: first.meta.subject.clone(), day: first.meta.day, strategy: first.meta.strategy.clone() };
        let x = DMatrix::from_fn(vectors.len(), MODEL_DIM, |r, c| {
            if c < FEATURE_DIM {
                vectors[r].values[c]
            } else {
                1.0
            }
        });
        let y = DVector::from_iterator(vectors.len(), vectors.iter().map(|v| v.meta.label.sign()));
        Self::new(x, y, id)
    }

    pub fn n_trials(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn has_both_labels(&self) -> bool {
        self.y.iter().any(|&v| v > 0.0) && self.y.iter().any(|&v| v < 0.0)
    }

    /// Rows listed in `rows`, in that order.
    pub fn select(&self, rows: &[usize]) -> Self {
        Self { x: self.x.select_rows(rows), y: self.y.select_rows(rows), id: self.id.clone() }
    }

    /// Drops row `i`.
    pub fn without(&self, i: usize) -> Self {
        Self { x: self.x.clone().remove_row(i), y: self.y.clone().remove_row(i), id: self.id.clone() }
    }

    pub(crate) fn gram(&self) -> (DMatrix<f64>, DVector<f64>) {
        let xt = self.x.transpose();
        (&xt * &self.x, &xt * &self.y)
    }
}

/// MAP weights from precomputed `XᵀX` and `Xᵀy`.
pub(crate) fn fit_map_gram(
    xtx: &DMatrix<f64>,
    xty: &DVector<f64>,
    prior: &GaussianPrior,
    lambda: f64,
) -> Result<DVector<f64>, DecoderError> {
    if xtx.nrows() != prior.dim() {
        return Err(DecoderError::DimensionMismatch { expected: prior.dim(), got: xtx.nrows() });
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(DecoderError::InvalidLambda(lambda));
    }
    let a = xtx + prior.precision() * lambda;
    let b = xty + prior.precision() * prior.mean() * lambda;
    let w = match a.clone().cholesky() {
        Some(chol) => chol.solve(&b),
        None => a.lu().solve(&b).ok_or(DecoderError::Singular)?,
    };
    if w.iter().any(|v| !v.is_finite()) {
        return Err(DecoderError::Singular);
    }
    Ok(w)
}

/// Minimizes `‖y − Xw‖² + λ (w − μ)ᵀ Σ⁻¹ (w − μ)`.
pub fn fit_map(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    prior: &GaussianPrior,
    lambda: f64,
) -> Result<LinearModel, DecoderError> {
    if x.nrows() != y.len() {
        return Err(DecoderError::LengthMismatch { left: x.nrows(), right: y.len() });
    }
    let xt = x.transpose();
    let weights = fit_map_gram(&(&xt * x), &(&xt * y), prior, lambda)?;
    Ok(LinearModel { weights })
}
