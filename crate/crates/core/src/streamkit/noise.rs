use serde::{Deserialize, Serialize};

use super::{EegFrame, QualityError};
use crate::features::{log_band_power, periodogram};
use crate::CHANNELS;

/// Environmental (line-noise) quality per channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub per_channel: [f64; CHANNELS],
}

/// Line-noise detector settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Mains frequency in Hz, 50 in Europe and 60 in the Americas.
    pub line_freq: f64,
    /// Half width of the line band in Hz.
    pub half_band: f64,
    /// Log band power (log10 µV²) that maps to full quality.
    pub full_quality_log_power: f64,
    /// Log band power that maps to zero quality.
    pub zero_quality_log_power: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { line_freq: 50.0, half_band: 1.0, full_quality_log_power: -1.0, zero_quality_log_power: 3.0 }
    }
}

impl NoiseConfig {
    pub fn with_line_freq(line_freq: f64) -> Self {
        Self { line_freq, ..Self::default() }
    }

    /// Linear ramp on the log scale, clamped to `[0, 1]`.
    pub fn quality_from_log_power(&self, p: f64) -> f64 {
        if p <= self.full_quality_log_power {
            return 1.0;
        }
        ((self.zero_quality_log_power - p) / (self.zero_quality_log_power - self.full_quality_log_power)).clamp(0.0, 1.0)
    }
}

/// Log band power around the line frequency from a one-second Hann
/// periodogram of the trailing second of `signal`.
pub fn line_log_power(signal: &[f64], sample_rate: f64, cfg: &NoiseConfig) -> Result<f64, QualityError> {
    let n = sample_rate.round() as usize;
    if signal.len() < n {
        return Err(QualityError::InsufficientData { len: signal.len(), needed: n });
    }
    let psd = periodogram(&signal[signal.len() - n..], sample_rate)?;
    Ok(log_band_power(&psd, cfg.line_freq - cfg.half_band, cfg.line_freq + cfg.half_band)?)
}

/// Rates environmental quality from one second of raw samples per channel.
pub fn em_noise_quality(
    window: &[Vec<f64>; CHANNELS],
    sample_rate: f64,
    cfg: &NoiseConfig,
) -> Result<NoiseReport, QualityError> {
    let mut per_channel = [0.0; CHANNELS];
    for (out, channel) in per_channel.iter_mut().zip(window) {
        *out = cfg.quality_from_log_power(line_log_power(channel, sample_rate, cfg)?);
    }
    Ok(NoiseReport { per_channel })
}

/// Collects frames and reports environmental quality once per second.
#[derive(Debug, Clone)]
pub struct NoiseMeter {
    cfg: NoiseConfig,
    sample_rate: f64,
    buffer: [Vec<f64>; CHANNELS],
}

impl NoiseMeter {
    pub fn new(cfg: NoiseConfig, sample_rate: f64) -> Self {
        Self { cfg, sample_rate, buffer: Default::default() }
    }

    pub fn push_frame(&mut self, frame: &EegFrame) -> Result<Option<NoiseReport>, QualityError> {
        if let Some(v) = frame.channels.iter().find(|v| !v.is_finite()) {
            return Err(QualityError::NonFinite { value: *v as f64 });
        }
        for (buf, &v) in self.buffer.iter_mut().zip(&frame.channels) {
            buf.push(v as f64);
        }
        if self.buffer[0].len() < self.sample_rate.round() as usize {
            return Ok(None);
        }
        let report = em_noise_quality(&self.buffer, self.sample_rate, &self.cfg)?;
        for buf in &mut self.buffer {
            buf.clear();
        }
        Ok(Some(report))
    }
}
