//! Hann-windowed periodograms and Welch averaging.
//!
//! Densities are one-sided and normalized by the window power, so that a
//! sinusoid of amplitude `A` sampled at a bin center integrates to `A²/2`
//! across its leakage bins.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::FeatureError;

/// Welch segment length in seconds.
pub const WELCH_SEGMENT_SECONDS: f64 = 2.0;

/// Power spectral density on a regular frequency grid starting at 0 Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate {
    freqs: Vec<f64>,
    power: Vec<f64>,
    resolution: f64,
}

impl SpectralEstimate {
    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// Density values in µV²/Hz, one per entry of [`freqs`](Self::freqs).
    pub fn power(&self) -> &[f64] {
        &self.power
    }

    /// Bin spacing in Hz.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Indices of bins with `lo <= f <= hi`.
    fn band_bins(&self, lo: f64, hi: f64) -> Result<std::ops::Range<usize>, FeatureError> {
        let nyquist = *self.freqs.last().unwrap_or(&0.0);
        if !(lo <= hi) || lo < 0.0 || hi > nyquist + 1e-9 {
            return Err(FeatureError::BandOutsideGrid { lo, hi, nyquist });
        }
        // Tolerance keeps bins that sit exactly on an edge despite rounding.
        let tol = self.resolution * 1e-9;
        let start = self.freqs.partition_point(|&f| f < lo - tol);
        let end = self.freqs.partition_point(|&f| f <= hi + tol);
        if start >= end {
            return Err(FeatureError::EmptyBand { lo, hi });
        }
        Ok(start..end)
    }

    /// Integrated power (µV²) over `[lo, hi]`, both edges inclusive.
    pub fn band_power(&self, lo: f64, hi: f64) -> Result<f64, FeatureError> {
        let bins = self.band_bins(lo, hi)?;
        Ok(self.power[bins].iter().sum::<f64>() * self.resolution)
    }

    /// Total integrated power over the whole grid.
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.resolution
    }
}

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| 0.5 * (1.0 - (2.0 * PI * k as f64 / n as f64).cos()))
        .collect()
}

struct Periodogram {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    scale: f64,
    buf: Vec<Complex<f64>>,
}

impl Periodogram {
    fn new(n: usize, sample_rate: f64) -> Self {
        let window = hann(n);
        let window_power: f64 = window.iter().map(|w| w * w).sum();
        Self {
            fft: FftPlanner::new().plan_fft_forward(n),
            window,
            scale: 1.0 / (sample_rate * window_power),
            buf: vec![Complex::default(); n],
        }
    }

    /// Adds the one-sided density of `segment` into `acc`.
    fn accumulate(&mut self, segment: &[f64], acc: &mut [f64]) {
        let n = segment.len();
        let mean = segment.iter().sum::<f64>() / n as f64;
        for ((slot, &x), &w) in self.buf.iter_mut().zip(segment).zip(&self.window) {
            *slot = Complex::new((x - mean) * w, 0.0);
        }
        self.fft.process(&mut self.buf);
        for (k, out) in acc.iter_mut().enumerate() {
            let mut p = self.buf[k].norm_sqr() * self.scale;
            if k != 0 && !(n % 2 == 0 && k == n / 2) {
                p *= 2.0;
            }
            *out += p;
        }
    }
}

fn grid(n: usize, sample_rate: f64) -> (Vec<f64>, f64) {
    let resolution = sample_rate / n as f64;
    ((0..=n / 2).map(|k| k as f64 * resolution).collect(), resolution)
}

/// Single Hann-windowed periodogram over the whole signal. The segment mean
/// is removed before windowing.
pub fn periodogram(signal: &[f64], sample_rate: f64) -> Result<SpectralEstimate, FeatureError> {
    if signal.len() < 2 {
        return Err(FeatureError::TooShort { len: signal.len(), needed: 2 });
    }
    let n = signal.len();
    let (freqs, resolution) = grid(n, sample_rate);
    let mut power = vec![0.0; freqs.len()];
    Periodogram::new(n, sample_rate).accumulate(signal, &mut power);
    Ok(SpectralEstimate { freqs, power, resolution })
}

/// Welch estimate: 2 s Hann segments with 50 % overlap, averaged.
pub fn psd_welch(signal: &[f64], sample_rate: f64) -> Result<SpectralEstimate, FeatureError> {
    let seg = (WELCH_SEGMENT_SECONDS * sample_rate).round() as usize;
    if seg < 2 || signal.len() < seg {
        return Err(FeatureError::TooShort { len: signal.len(), needed: seg.max(2) });
    }
    let step = seg / 2;
    let (freqs, resolution) = grid(seg, sample_rate);
    let mut power = vec![0.0; freqs.len()];
    let mut engine = Periodogram::new(seg, sample_rate);
    let mut count = 0usize;
    let mut start = 0;
    while start + seg <= signal.len() {
        engine.accumulate(&signal[start..start + seg], &mut power);
        count += 1;
        start += step;
    }
    for p in &mut power {
        *p /= count as f64;
    }
    Ok(SpectralEstimate { freqs, power, resolution })
}

/// `log10` of the mean density across bins in `[lo, hi]`.
pub fn log_band_power(psd: &SpectralEstimate, lo: f64, hi: f64) -> Result<f64, FeatureError> {
    let bins = psd.band_bins(lo, hi)?;
    let count = bins.len() as f64;
    Ok((psd.power[bins].iter().sum::<f64>() / count).log10())
}

/// Lower and upper edge of the dominant-frequency search band.
pub const DOMINANT_SEARCH_BAND: (f64, f64) = (5.0, 15.0);

/// Frequency of the largest bin within 5–15 Hz. Ties resolve to the lower
/// frequency.
pub fn dominant_frequency(psd: &SpectralEstimate) -> Result<f64, FeatureError> {
    let (lo, hi) = DOMINANT_SEARCH_BAND;
    let bins = psd.band_bins(lo, hi)?;
    let mut best = bins.start;
    for k in bins {
        if psd.power[k] > psd.power[best] {
            best = k;
        }
    }
    Ok(psd.freqs[best])
}
