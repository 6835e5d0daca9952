use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::profile::SyntheticSubjectProfile;
use super::SimError;
use crate::features::{Label, TrialMeta, TrialWindow};
use crate::CHANNELS;

/// Artifact burst length in seconds.
pub const ARTIFACT_SECONDS: f64 = 0.5;
/// Artifact peak amplitude relative to the background sigma.
pub const ARTIFACT_GAIN: f64 = 10.0;

/// Generator for one (profile, seed) pair. Both halves of the key matter.
pub fn sim_rng(profile_seed: u64, seed: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&profile_seed.to_le_bytes());
    key[8..16].copy_from_slice(&seed.to_le_bytes());
    key[16..].copy_from_slice(b"mynd-simkit-v1\0\0");
    ChaCha20Rng::from_seed(key)
}

/// 1/f noise by spectral shaping of white Gaussian noise, scaled so the
/// sample standard deviation equals `sigma` exactly.
pub fn pink_noise<R: Rng>(n: usize, sigma: f64, rng: &mut R) -> Vec<f64> {
    if n < 2 || sigma == 0.0 {
        return vec![0.0; n];
    }
    let mut buf: Vec<Complex<f64>> = (0..n).map(|_| Complex::new(rng.sample(StandardNormal), 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    buf[0] = Complex::new(0.0, 0.0);
    for (k, v) in buf.iter_mut().enumerate().skip(1) {
        // Amplitude ∝ f^-1/2 gives power ∝ 1/f; symmetric in k keeps the
        // spectrum Hermitian so the inverse is real.
        *v /= (k.min(n - k) as f64).sqrt();
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let mut x: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    for v in &mut x {
        *v = (*v - mean) * sigma / sd;
    }
    x
}

/// Raised-cosine pulse of the given length and peak.
pub fn raised_cosine(len: usize, peak: f64) -> Vec<f64> {
    if len < 2 {
        return vec![peak; len];
    }
    (0..len).map(|i| peak * 0.5 * (1.0 - (2.0 * PI * i as f64 / (len - 1) as f64).cos())).collect()
}

/// What to synthesize for one contiguous stretch of signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentSpec {
    pub samples: usize,
    pub sample_rate: f64,
    /// Alpha amplitude multiplier per channel.
    pub alpha_mult: [f64; CHANNELS],
    /// Extra white noise, e.g. from a loose headset.
    pub extra_sigma: f64,
}

/// Background, alpha rhythm, line interference, extra white noise and
/// artifact bursts for every channel.
pub fn gen_segment<R: Rng>(profile: &SyntheticSubjectProfile, spec: &SegmentSpec, rng: &mut R) -> [Vec<f64>; CHANNELS] {
    let n = spec.samples;
    let fs = spec.sample_rate;
    let jitter = (1.0 + profile.alpha_jitter * rng.sample::<f64, _>(StandardNormal)).max(0.0);
    let mut out: [Vec<f64>; CHANNELS] = std::array::from_fn(|_| Vec::new());
    for (c, ch) in out.iter_mut().enumerate() {
        let mut x = pink_noise(n, profile.baseline_sigma, rng);
        let amp = profile.alpha_amp * spec.alpha_mult[c] * jitter;
        let alpha_phase = rng.gen_range(0.0..2.0 * PI);
        let line_phase = rng.gen_range(0.0..2.0 * PI);
        for (i, v) in x.iter_mut().enumerate() {
            let t = i as f64 / fs;
            *v += amp * (2.0 * PI * profile.alpha_freq * t + alpha_phase).sin();
            *v += profile.line_noise_amp * (2.0 * PI * profile.line_freq * t + line_phase).sin();
        }
        if spec.extra_sigma > 0.0 {
            for v in &mut x {
                *v += spec.extra_sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        *ch = x;
    }
    let burst_len = (ARTIFACT_SECONDS * fs).round() as usize;
    let expected = profile.artifact_rate * n as f64 / fs / 60.0;
    if expected > 0.0 && n >= burst_len && burst_len > 0 {
        let count = Poisson::new(expected).expect("positive rate").sample(rng) as usize;
        for _ in 0..count {
            let start = rng.gen_range(0..=n - burst_len);
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let pulse = raised_cosine(burst_len, sign * ARTIFACT_GAIN * profile.baseline_sigma);
            for ch in out.iter_mut() {
                for (v, p) in ch[start..start + burst_len].iter_mut().zip(&pulse) {
                    *v += p;
                }
            }
        }
    }
    out
}

/// One synthetic trial. The alpha rhythm is scaled by the task's
/// multipliers; everything else is task independent.
pub fn gen_trial(
    profile: &SyntheticSubjectProfile,
    label: Label,
    duration_seconds: f64,
    sample_rate: f64,
    seed: u64,
) -> Result<TrialWindow, SimError> {
    profile.validate()?;
    if !(duration_seconds > 0.0) || !(sample_rate > 0.0) || !duration_seconds.is_finite() || !sample_rate.is_finite() {
        return Err(SimError::InvalidArgument("duration and sample rate must be positive".into()));
    }
    let mut rng = sim_rng(profile.seed, seed);
    let spec = SegmentSpec {
        samples: (duration_seconds * sample_rate).round() as usize,
        sample_rate,
        alpha_mult: profile.task_modulation.for_label(label),
        extra_sigma: 0.0,
    };
    let channels = gen_segment(profile, &spec, &mut rng).into_iter().collect();
    Ok(TrialWindow {
        channels,
        sample_rate,
        meta: TrialMeta { subject: format!("sim-{}", profile.seed), day: 1, strategy: "synthetic".into(), trial: 0, label },
    })
}
