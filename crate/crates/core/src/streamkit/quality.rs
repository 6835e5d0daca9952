use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{EegFrame, QualityError};
use crate::CHANNELS;

/// Filtered samples per variance window (500 ms at 256 Hz).
pub const WINDOW_LEN: usize = 128;
/// Number of window qualities averaged into the filter weight.
pub const HISTORY_LEN: usize = 4;
/// Filter weight before the first window has been evaluated.
pub const INITIAL_QUALITY: f64 = 0.5;
/// Variance floor in µV², keeps constant signals at full quality.
pub const VARIANCE_FLOOR: f64 = 1e-6;
/// Window variance (µV²) at or below which a window counts as full quality.
pub const DEFAULT_VARIANCE_THRESHOLD: f64 = 150.0;

/// Maps a window variance onto a quality fraction.
pub fn quality_from_variance(variance: f64, threshold: f64) -> f64 {
    (threshold / variance.max(VARIANCE_FLOOR)).clamp(0.0, 1.0)
}

/// Unbiased sample variance. Zero for fewer than two samples.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Quality-weighted moving-average filter and variance window for one
/// channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelQualityState {
    prev_filtered: Option<f64>,
    window: Vec<f64>,
    raw_window: Vec<f64>,
    history: VecDeque<f64>,
    avg_quality: f64,
    threshold: f64,
    last_raw_variance: Option<f64>,
    rejected: u64,
}

impl Default for ChannelQualityState {
    fn default() -> Self {
        Self::new(DEFAULT_VARIANCE_THRESHOLD)
    }
}

impl ChannelQualityState {
    pub fn new(threshold: f64) -> Self {
        Self {
            prev_filtered: None,
            window: Vec::with_capacity(WINDOW_LEN),
            raw_window: Vec::with_capacity(WINDOW_LEN),
            history: VecDeque::with_capacity(HISTORY_LEN),
            avg_quality: INITIAL_QUALITY,
            threshold,
            last_raw_variance: None,
            rejected: 0,
        }
    }

    /// State with a given previous filter output and filter weight, as if
    /// mid-stream.
    pub fn resume(threshold: f64, prev_filtered: f64, avg_quality: f64) -> Self {
        Self {
            prev_filtered: Some(prev_filtered),
            avg_quality: avg_quality.clamp(0.0, 1.0),
            ..Self::new(threshold)
        }
    }

    pub fn avg_quality(&self) -> f64 {
        self.avg_quality
    }

    pub fn prev_filtered(&self) -> Option<f64> {
        self.prev_filtered
    }

    pub fn buffered(&self) -> usize {
        self.window.len()
    }

    pub fn history(&self) -> impl Iterator<Item = f64> + '_ {
        self.history.iter().copied()
    }

    /// Variance of the unfiltered samples of the last evaluated window.
    pub fn last_raw_variance(&self) -> Option<f64> {
        self.last_raw_variance
    }

    /// Count of samples rejected as non-finite.
    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    /// Filters one raw sample and appends it to the window. Returns the
    /// filtered value. Non-finite samples are rejected and leave the filter
    /// untouched.
    pub fn ingest_sample(&mut self, raw: f64) -> Result<f64, QualityError> {
        if !raw.is_finite() {
            self.rejected += 1;
            return Err(QualityError::NonFinite { value: raw });
        }
        if self.window.len() >= WINDOW_LEN {
            self.evaluate_window();
        }
        // The first sample of a stream seeds the filter directly.
        let filtered = match self.prev_filtered {
            Some(prev) => self.avg_quality * raw + (1.0 - self.avg_quality) * prev,
            None => raw,
        };
        self.prev_filtered = Some(filtered);
        self.window.push(filtered);
        self.raw_window.push(raw);
        Ok(filtered)
    }

    /// Scores the window once it holds [`WINDOW_LEN`] samples, updates the
    /// averaged quality and clears the window. Returns the window quality.
    pub fn evaluate_window(&mut self) -> Option<f64> {
        if self.window.len() < WINDOW_LEN {
            return None;
        }
        let q = quality_from_variance(sample_variance(&self.window), self.threshold);
        self.last_raw_variance = Some(sample_variance(&self.raw_window));
        if self.history.len() == HISTORY_LEN {
            self.history.pop_front();
        }
        self.history.push_back(q);
        self.avg_quality = self.history.iter().sum::<f64>() / self.history.len() as f64;
        self.window.clear();
        self.raw_window.clear();
        Some(q)
    }
}

/// Per-channel signal quality at the end of a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub per_channel: [f64; CHANNELS],
    /// Sample index of the last sample in the window.
    pub timestamp: u64,
}

impl QualityReport {
    pub fn min(&self) -> f64 {
        self.per_channel.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.per_channel.iter().sum::<f64>() / CHANNELS as f64
    }
}

/// Four channel estimators driven frame by frame.
#[derive(Debug, Clone)]
pub struct QualityEstimator {
    channels: [ChannelQualityState; CHANNELS],
    last_index: Option<u64>,
}

impl Default for QualityEstimator {
    fn default() -> Self {
        Self::new(DEFAULT_VARIANCE_THRESHOLD)
    }
}

impl QualityEstimator {
    pub fn new(threshold: f64) -> Self {
        Self {
            channels: std::array::from_fn(|_| ChannelQualityState::new(threshold)),
            last_index: None,
        }
    }

    pub fn channel(&self, c: usize) -> &ChannelQualityState {
        &self.channels[c]
    }

    /// Current averaged quality per channel, which is what a progress
    /// display shows.
    pub fn snapshot(&self) -> [f64; CHANNELS] {
        std::array::from_fn(|c| self.channels[c].avg_quality())
    }

    /// Feeds one frame. A frame with any non-finite value, or one that does
    /// not advance the sample index, is rejected as a whole. Returns a report
    /// of averaged qualities whenever a window closes.
    pub fn push_frame(&mut self, frame: &EegFrame) -> Result<Option<QualityReport>, QualityError> {
        if let Some(last) = self.last_index {
            if frame.sample_index <= last {
                return Err(QualityError::OutOfOrder { last, got: frame.sample_index });
            }
        }
        if let Some(c) = frame.channels.iter().position(|v| !v.is_finite()) {
            self.channels[c].rejected += 1;
            return Err(QualityError::NonFinite { value: frame.channels[c] as f64 });
        }
        self.last_index = Some(frame.sample_index);
        let mut closed = false;
        for (state, &v) in self.channels.iter_mut().zip(&frame.channels) {
            state.ingest_sample(v as f64)?;
            closed |= state.evaluate_window().is_some();
        }
        Ok(closed.then(|| QualityReport { per_channel: self.snapshot(), timestamp: frame.sample_index }))
    }
}

/// Fitting targets and their relaxation over time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittingGateConfig {
    pub variance_threshold: f64,
    pub initial_target: f64,
    pub relaxed_target: f64,
    pub relax_after_seconds: f64,
}

impl Default for FittingGateConfig {
    fn default() -> Self {
        Self {
            variance_threshold: DEFAULT_VARIANCE_THRESHOLD,
            initial_target: 1.0,
            relaxed_target: 0.75,
            relax_after_seconds: 180.0,
        }
    }
}

impl FittingGateConfig {
    pub fn validate(&self) -> Result<(), QualityError> {
        if !(self.relaxed_target < self.initial_target) || !(self.relax_after_seconds > 0.0) {
            return Err(QualityError::InvalidConfig);
        }
        Ok(())
    }

    pub fn target_at(&self, elapsed_seconds: f64) -> f64 {
        if elapsed_seconds < self.relax_after_seconds {
            self.initial_target
        } else {
            self.relaxed_target
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateStatus {
    pub target: f64,
    pub met: bool,
}

/// Whether every channel has reached the quality target in force after
/// `elapsed_seconds` of fitting. There is no upper time limit.
pub fn fitting_gate(elapsed_seconds: f64, report: &QualityReport, cfg: &FittingGateConfig) -> GateStatus {
    let target = cfg.target_at(elapsed_seconds.max(0.0));
    GateStatus { target, met: report.per_channel.iter().all(|&q| q >= target) }
}
