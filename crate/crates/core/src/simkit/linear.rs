//! Class-conditional Gaussian tasks in feature space, for decoder checks
//! that do not need the EEG pipeline.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::SimError;
use crate::decoder::{TaskDataset, TaskId, MODEL_DIM};
use crate::features::FEATURE_DIM;

/// Trials of task `s` are `x = y·d_s + noise`, with per-task class shift
/// `d_s = mean_shift + shift_sd·z` and a trailing bias column of ones.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTaskModel {
    pub mean_shift: Vec<f64>,
    pub shift_sd: f64,
    pub noise_sd: f64,
}

impl LinearTaskModel {
    /// No class information at all.
    pub fn null(noise_sd: f64) -> Self {
        Self { mean_shift: vec![0.0; FEATURE_DIM], shift_sd: 0.0, noise_sd }
    }
}

pub fn gen_linear_tasks(model: &LinearTaskModel, n_tasks: usize, n_trials: usize, seed: u64) -> Result<Vec<TaskDataset>, SimError> {
    if model.mean_shift.len() != FEATURE_DIM {
        return Err(SimError::InvalidArgument(format!("mean_shift needs {FEATURE_DIM} entries")));
    }
    if n_trials < 2 || !(model.noise_sd >= 0.0) || !(model.shift_sd >= 0.0) {
        return Err(SimError::InvalidArgument("need at least 2 trials and non-negative spreads".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n_tasks)
        .map(|s| {
            let shift: Vec<f64> =
                model.mean_shift.iter().map(|m| m + model.shift_sd * rng.sample::<f64, _>(StandardNormal)).collect();
            let mut labels: Vec<f64> = (0..n_trials).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
            labels.shuffle(&mut rng);
            let mut x = DMatrix::zeros(n_trials, MODEL_DIM);
            for (r, y) in labels.iter().enumerate() {
                for c in 0..FEATURE_DIM {
                    x[(r, c)] = y * shift[c] + model.noise_sd * rng.sample::<f64, _>(StandardNormal);
                }
                x[(r, FEATURE_DIM)] = 1.0;
            }
            let id = TaskId { subject: format!("linear-{s}"), day: 1, strategy: "linear".into() };
            TaskDataset::new(x, DVector::from_vec(labels), id).map_err(SimError::from)
        })
        .collect()
}
