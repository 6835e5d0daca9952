//! Streaming signal-quality estimation for headset fitting and
//! environmental line-noise rating.
//!
//! Each channel runs a moving-average filter whose weight is the channel's
//! recent quality. Every 128 filtered samples the window variance is scored
//! against the 150 µV² criterion, and the last four scores are averaged into
//! the next filter weight. A poor fit therefore slows the filter down instead
//! of pinning the display at zero.

mod noise;
mod quality;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureError;
use crate::CHANNELS;

pub use noise::{em_noise_quality, line_log_power, NoiseConfig, NoiseMeter, NoiseReport};
pub use quality::{
    fitting_gate, quality_from_variance, sample_variance, ChannelQualityState, FittingGateConfig, GateStatus,
    QualityEstimator, QualityReport, DEFAULT_VARIANCE_THRESHOLD, HISTORY_LEN, INITIAL_QUALITY, VARIANCE_FLOOR,
    WINDOW_LEN,
};

/// One multichannel sample in microvolts, channel order AF7, AF8, TP9, TP10.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EegFrame {
    pub sample_index: u64,
    pub channels: [f32; CHANNELS],
}

#[derive(Debug, Error, PartialEq)]
pub enum QualityError {
    #[error("non-finite sample {value} rejected")]
    NonFinite { value: f64 },
    #[error("sample index {got} does not follow {last}")]
    OutOfOrder { last: u64, got: u64 },
    #[error("need {needed} samples for a noise estimate, got {len}")]
    InsufficientData { len: usize, needed: usize },
    #[error("relaxed target must be below the initial target and the relax time positive")]
    InvalidConfig,
    #[error(transparent)]
    Spectral(#[from] FeatureError),
}
