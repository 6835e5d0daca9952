use nalgebra::DMatrix;

use super::map::fit_map_gram;
use super::{DecoderError, GaussianPrior, LinearModel, TaskDataset};

/// Regularization grid searched when no fixed strength is given.
pub const DEFAULT_LAMBDA_GRID: [f64; 5] = [1e-2, 1e-1, 1.0, 10.0, 1e2];

/// How the regularization strength is chosen for each training fold.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSelection {
    Fixed(f64),
    /// Pick the grid value with the smallest leave-one-out squared error on
    /// the training fold. Ties go to the larger value.
    InnerLoo(Vec<f64>),
}

impl Default for LambdaSelection {
    fn default() -> Self {
        LambdaSelection::InnerLoo(DEFAULT_LAMBDA_GRID.to_vec())
    }
}

/// Label predicted from a decision score. A score of exactly zero predicts
/// nothing and counts as an error.
pub fn predict_label(score: f64) -> Option<f64> {
    if score > 0.0 {
        Some(1.0)
    } else if score < 0.0 {
        Some(-1.0)
    } else {
        None
    }
}

/// Leave-one-out squared prediction error of the MAP fit, via the hat
/// matrix of the problem recentered at the prior mean.
pub fn press(task: &TaskDataset, prior: &GaussianPrior, lambda: f64) -> Result<f64, DecoderError> {
    let (xtx, _) = task.gram();
    let a = xtx + prior.precision() * lambda;
    let a_inv = match a.clone().cholesky() {
        Some(c) => c.inverse(),
        None => a.try_inverse().ok_or(DecoderError::Singular)?,
    };
    let hat: DMatrix<f64> = &task.x * a_inv * task.x.transpose();
    let centered = &task.y - &task.x * prior.mean();
    let residual = &centered - &hat * &centered;
    let mut total = 0.0;
    for i in 0..task.n_trials() {
        let leverage = 1.0 - hat[(i, i)];
        if leverage.abs() < 1e-12 {
            return Ok(f64::INFINITY);
        }
        total += (residual[i] / leverage).powi(2);
    }
    Ok(total)
}

/// Resolves the regularization strength for one training set.
pub fn select_lambda(train: &TaskDataset, prior: &GaussianPrior, selection: &LambdaSelection) -> Result<f64, DecoderError> {
    match selection {
        LambdaSelection::Fixed(l) => Ok(*l),
        LambdaSelection::InnerLoo(grid) => {
            let (&first, rest) = grid.split_first().ok_or(DecoderError::Empty)?;
            if rest.is_empty() || train.n_trials() < 2 {
                return Ok(first);
            }
            let mut best = (first, press(train, prior, first)?);
            for &l in rest {
                let score = press(train, prior, l)?;
                if score < best.1 || (score == best.1 && l > best.0) {
                    best = (l, score);
                }
            }
            Ok(best.0)
        }
    }
}

/// Fits on `task` with the selected strength.
pub fn fit_selected(task: &TaskDataset, prior: &GaussianPrior, selection: &LambdaSelection) -> Result<(LinearModel, f64), DecoderError> {
    let lambda = select_lambda(task, prior, selection)?;
    let (xtx, xty) = task.gram();
    Ok((LinearModel { weights: fit_map_gram(&xtx, &xty, prior, lambda)? }, lambda))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LooOutcome {
    pub accuracy: f64,
    pub correct: usize,
    pub n: usize,
    /// Held-out decision score per trial.
    pub scores: Vec<f64>,
    /// Regularization strength used for each fold.
    pub lambdas: Vec<f64>,
}

/// Leave-one-trial-out classification accuracy.
pub fn loo_accuracy(task: &TaskDataset, prior: &GaussianPrior, selection: &LambdaSelection) -> Result<LooOutcome, DecoderError> {
    let n = task.n_trials();
    if n < 2 {
        return Err(DecoderError::TooFewTrials(n));
    }
    if task.y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(DecoderError::NonBinaryLabels);
    }
    if !task.has_both_labels() {
        return Err(DecoderError::SingleClass);
    }
    if task.dim() != prior.dim() {
        return Err(DecoderError::DimensionMismatch { expected: prior.dim(), got: task.dim() });
    }
    let mut correct = 0;
    let mut scores = Vec::with_capacity(n);
    let mut lambdas = Vec::with_capacity(n);
    for i in 0..n {
        let train = task.without(i);
        let (model, lambda) = fit_selected(&train, prior, selection)?;
        let row: Vec<f64> = task.x.row(i).iter().copied().collect();
        let score = model.score(&row);
        if predict_label(score) == Some(task.y[i]) {
            correct += 1;
        }
        scores.push(score);
        lambdas.push(lambda);
    }
    Ok(LooOutcome { accuracy: correct as f64 / n as f64, correct, n, scores, lambdas })
}
