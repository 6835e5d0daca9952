//! Transfer-learning decoder.
//!
//! A Gaussian prior over linear regression weights is learned across lab
//! subjects, then used to regularize small per-day models evaluated with
//! leave-one-trial-out cross-validation.

mod loo;
mod map;
mod mediators;
mod mtl;
mod prior;
mod prior_file;
mod stats;

use thiserror::Error;

pub use loo::{fit_selected, loo_accuracy, predict_label, press, select_lambda, LambdaSelection, LooOutcome, DEFAULT_LAMBDA_GRID};
pub use map::{fit_map, LinearModel, TaskDataset, TaskId, MODEL_DIM};
pub use mediators::{
    mediator_report, write_mediator_table, write_results_table, DecodingResult, Mediator, MediatorCorrelation,
    MediatorReport,
};
pub use mtl::{learn_prior, psd_sqrt, PriorFit, PriorLearning};
pub use prior::GaussianPrior;
pub use prior_file::{PriorFile, PRIOR_MAGIC, PRIOR_VERSION};
pub use stats::{correlation_p_value, pearson, Correlation};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DecoderError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("normal equations are singular")]
    Singular,
    #[error("regularization strength must be finite and non-negative, got {0}")]
    InvalidLambda(f64),
    #[error("covariance ridge must be positive, got {0}")]
    InvalidRidge(f64),
    #[error("covariance is not symmetric")]
    NotSymmetric,
    #[error("covariance is not positive definite")]
    NotPositiveDefinite,
    #[error("non-finite input")]
    NonFinite,
    #[error("at least 2 tasks required, got {0}")]
    TooFewTasks(usize),
    #[error("too few trials: {0}")]
    TooFewTrials(usize),
    #[error("both labels must be present")]
    SingleClass,
    #[error("labels must be exactly +1 or -1")]
    NonBinaryLabels,
    #[error("zero variance")]
    ZeroVariance,
    #[error("empty input")]
    Empty,
    #[error("not a prior file")]
    BadMagic,
    #[error("unsupported prior file version {0}")]
    UnsupportedVersion(u16),
    #[error("prior file is truncated")]
    Truncated,
    #[error("malformed prior file: {0}")]
    Malformed(String),
    #[error("export failed: {0}")]
    Export(String),
}
