//! Alternating estimation of a Gaussian weight prior over several tasks.
//!
//! With the covariance held fixed each task gets its MAP weights; the mean
//! is then reset to the average weight vector and the covariance to the
//! trace-normalized square root of the weight scatter, which is the
//! closed-form covariance step of convex multi-task feature learning.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};

use super::map::fit_map_gram;
use super::{DecoderError, GaussianPrior, TaskDataset};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorLearning {
    /// Upper bound on alternating updates.
    pub iterations: usize,
    /// Stop once the Frobenius change of the covariance drops below this.
    pub tolerance: f64,
    /// Regularization strength used while fitting the lab tasks.
    pub lambda: f64,
    /// Added to the covariance diagonal so it stays invertible.
    pub ridge: f64,
    /// Learn the prior mean; otherwise it stays at zero.
    pub learn_mean: bool,
}

impl Default for PriorLearning {
    fn default() -> Self {
        Self { iterations: 10_000, tolerance: 1e-8, lambda: 1.0, ridge: 1e-6, learn_mean: true }
    }
}

#[derive(Debug, Clone)]
pub struct PriorFit {
    pub prior: GaussianPrior,
    /// Updates actually performed.
    pub iterations: usize,
    /// Frobenius norm of the last covariance change.
    pub residual: f64,
    pub converged: bool,
    /// Negative scatter eigenvalues clipped to zero across all iterations.
    pub clipped_eigenvalues: usize,
}

/// Symmetric PSD square root. Eigenvalues within round-off of zero
/// (below `d·ε·λ_max`) are treated as zero, since the square root would
/// otherwise amplify that noise to about `1e-8·sqrt(λ_max)`. Returns the
/// root and the number of clearly negative eigenvalues clipped.
pub fn psd_sqrt(m: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let floor = m.nrows() as f64 * f64::EPSILON * eig.eigenvalues.amax();
    let mut clipped = 0;
    let roots = eig.eigenvalues.map(|l| {
        if l < -floor.max(1e-12 * eig.eigenvalues.amax()) {
            clipped += 1;
        }
        if l <= floor {
            0.0
        } else {
            l.sqrt()
        }
    });
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose();
    ((&root + root.transpose()) * 0.5, clipped)
}

/// Covariance step: `M^{1/2} / tr(M^{1/2}) + ridge·I`. A vanishing scatter
/// collapses to `ridge·I`.
fn covariance_update(weights: &[DVector<f64>], mean: &DVector<f64>, ridge: f64) -> (DMatrix<f64>, usize) {
    let d = mean.len();
    let mut scatter = DMatrix::zeros(d, d);
    for w in weights {
        let c = w - mean;
        scatter += &c * c.transpose();
    }
    scatter /= weights.len() as f64;
    let (root, clipped) = psd_sqrt(&scatter);
    let trace = root.trace();
    let identity = DMatrix::<f64>::identity(d, d);
    if trace > 1e-12 {
        (root / trace + identity * ridge, clipped)
    } else {
        (identity * ridge, clipped)
    }
}

/// Learns a prior from lab tasks, starting from zero mean and identity
/// covariance.
pub fn learn_prior(tasks: &[TaskDataset], cfg: &PriorLearning) -> Result<PriorFit, DecoderError> {
    if tasks.len() < 2 {
        return Err(DecoderError::TooFewTasks(tasks.len()));
    }
    let dim = tasks[0].dim();
    for t in tasks {
        if t.dim() != dim {
            return Err(DecoderError::DimensionMismatch { expected: dim, got: t.dim() });
        }
        if t.n_trials() < 2 {
            return Err(DecoderError::TooFewTrials(t.n_trials()));
        }
    }
    if !(cfg.ridge > 0.0) {
        return Err(DecoderError::InvalidRidge(cfg.ridge));
    }
    let grams: Vec<_> = tasks.iter().map(TaskDataset::gram).collect();

    let mut prior = GaussianPrior::uninformative(dim);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut clipped_total = 0;
    let mut converged = false;
    while iterations < cfg.iterations {
        let weights = grams
            .iter()
            .map(|(xtx, xty)| fit_map_gram(xtx, xty, &prior, cfg.lambda))
            .collect::<Result<Vec<_>, _>>()?;
        let mean = if cfg.learn_mean {
            weights.iter().fold(DVector::zeros(dim), |acc, w| acc + w) / weights.len() as f64
        } else {
            DVector::zeros(dim)
        };
        let (covariance, clipped) = covariance_update(&weights, &mean, cfg.ridge);
        if clipped > 0 {
            warn!("clipped {clipped} negative scatter eigenvalues in update {}", iterations + 1);
            clipped_total += clipped;
        }
        residual = (&covariance - prior.covariance()).norm();
        prior = GaussianPrior::new(mean, covariance)?;
        iterations += 1;
        if residual < cfg.tolerance {
            converged = true;
            break;
        }
    }
    debug!("prior learning stopped after {iterations} updates, residual {residual:e}");
    Ok(PriorFit { prior, iterations, residual, converged, clipped_eigenvalues: clipped_total })
}
