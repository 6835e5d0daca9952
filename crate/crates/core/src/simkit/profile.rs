use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::features::Label;
use crate::CHANNELS;

/// Alpha amplitude multipliers per channel for each task of a strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskModulation {
    pub positive: [f64; CHANNELS],
    pub negative: [f64; CHANNELS],
}

impl TaskModulation {
    pub fn uniform(positive: f64, negative: f64) -> Self {
        Self { positive: [positive; CHANNELS], negative: [negative; CHANNELS] }
    }

    /// Moves every multiplier toward 1 (`depth < 1`) or away from it.
    pub fn scaled(&self, depth: f64) -> Self {
        let f = |m: [f64; CHANNELS]| m.map(|v| (1.0 + (v - 1.0) * depth).max(0.0));
        Self { positive: f(self.positive), negative: f(self.negative) }
    }

    pub fn for_label(&self, label: Label) -> [f64; CHANNELS] {
        match label {
            Label::Positive => self.positive,
            Label::Negative => self.negative,
        }
    }
}

/// Synthetic stand-in for the participant adjusting the headset: extra
/// white noise whose standard deviation decays exponentially from the
/// moment fitting starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FittingModel {
    pub initial_extra_sigma: f64,
    pub decay_seconds: f64,
}

impl FittingModel {
    pub fn extra_sigma_at(&self, seconds: f64) -> f64 {
        if self.decay_seconds <= 0.0 {
            return 0.0;
        }
        self.initial_extra_sigma * (-seconds / self.decay_seconds).exp()
    }
}

/// Parameters of one synthetic participant. Amplitudes are in microvolts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSubjectProfile {
    pub baseline_sigma: f64,
    pub alpha_amp: f64,
    pub alpha_freq: f64,
    pub task_modulation: TaskModulation,
    /// Relative standard deviation of the per-trial alpha amplitude.
    #[serde(default = "default_jitter")]
    pub alpha_jitter: f64,
    pub line_noise_amp: f64,
    #[serde(default = "default_line_freq")]
    pub line_freq: f64,
    /// Artifact bursts per minute.
    pub artifact_rate: f64,
    pub fitting: FittingModel,
    pub seed: u64,
}

fn default_jitter() -> f64 {
    0.1
}

fn default_line_freq() -> f64 {
    50.0
}

impl Default for SyntheticSubjectProfile {
    fn default() -> Self {
        Self {
            baseline_sigma: 6.0,
            alpha_amp: 8.0,
            alpha_freq: 10.0,
            task_modulation: TaskModulation { positive: [1.2, 1.2, 1.5, 1.5], negative: [0.8, 0.8, 0.5, 0.5] },
            alpha_jitter: 0.1,
            line_noise_amp: 1.0,
            line_freq: 50.0,
            artifact_rate: 0.5,
            fitting: FittingModel { initial_extra_sigma: 40.0, decay_seconds: 8.0 },
            seed: 0,
        }
    }
}

impl SyntheticSubjectProfile {
    pub fn from_json(bytes: &[u8]) -> Result<Self, SimError> {
        let p: Self = serde_json::from_slice(bytes).map_err(|e| SimError::Profile(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }

    /// Same profile with both tasks at the neutral multiplier.
    pub fn without_modulation(mut self) -> Self {
        self.task_modulation = TaskModulation::uniform(1.0, 1.0);
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Profile(m.to_string()));
        let mods = self.task_modulation.positive.iter().chain(&self.task_modulation.negative);
        let all = [
            self.baseline_sigma,
            self.alpha_amp,
            self.alpha_freq,
            self.alpha_jitter,
            self.line_noise_amp,
            self.line_freq,
            self.artifact_rate,
            self.fitting.initial_extra_sigma,
            self.fitting.decay_seconds,
        ];
        if all.iter().chain(mods.clone()).any(|v| !v.is_finite()) {
            return bad("non-finite parameter");
        }
        if self.baseline_sigma < 0.0 || self.alpha_amp < 0.0 || self.line_noise_amp < 0.0 || self.alpha_jitter < 0.0 {
            return bad("amplitudes must be non-negative");
        }
        if mods.clone().any(|&m| m < 0.0) {
            return bad("task modulation must be non-negative");
        }
        if !(7.0..=14.0).contains(&self.alpha_freq) {
            return bad("alpha_freq must lie in 7..=14 Hz");
        }
        if self.line_freq <= 0.0 || self.artifact_rate < 0.0 {
            return bad("line_freq must be positive and artifact_rate non-negative");
        }
        if self.fitting.initial_extra_sigma < 0.0 || self.fitting.decay_seconds < 0.0 {
            return bad("fitting parameters must be non-negative");
        }
        Ok(())
    }
}

/// Spread of subject profiles around a base profile for corpus generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDistribution {
    pub base: SyntheticSubjectProfile,
    /// Relative standard deviation of alpha amplitude across subjects.
    pub alpha_amp_spread: f64,
    /// Alpha peak frequencies are drawn uniformly from base ± this many Hz.
    pub alpha_freq_spread: f64,
    /// Standard deviation added to each modulation multiplier.
    pub modulation_spread: f64,
    /// Relative standard deviation of the background noise level.
    pub sigma_spread: f64,
}

impl ProfileDistribution {
    /// Every draw equals `base` apart from the seed.
    pub fn fixed(base: SyntheticSubjectProfile) -> Self {
        Self { base, alpha_amp_spread: 0.0, alpha_freq_spread: 0.0, modulation_spread: 0.0, sigma_spread: 0.0 }
    }

    pub fn around(base: SyntheticSubjectProfile) -> Self {
        Self { base, alpha_amp_spread: 0.2, alpha_freq_spread: 1.0, modulation_spread: 0.1, sigma_spread: 0.15 }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> SyntheticSubjectProfile {
        let n = Normal::new(0.0, 1.0).expect("unit normal");
        let mut p = self.base;
        p.seed = rng.gen();
        p.alpha_amp = (p.alpha_amp * (1.0 + self.alpha_amp_spread * n.sample(rng))).max(0.0);
        p.baseline_sigma = (p.baseline_sigma * (1.0 + self.sigma_spread * n.sample(rng))).max(0.5 * p.baseline_sigma);
        if self.alpha_freq_spread > 0.0 {
            p.alpha_freq = (p.alpha_freq + rng.gen_range(-self.alpha_freq_spread..=self.alpha_freq_spread)).clamp(7.0, 14.0);
        }
        for m in p.task_modulation.positive.iter_mut().chain(p.task_modulation.negative.iter_mut()) {
            *m = (*m + self.modulation_spread * n.sample(rng)).max(0.0);
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn json_round_trip_and_validation() {
        let p = SyntheticSubjectProfile::default();
        assert_eq!(SyntheticSubjectProfile::from_json(p.to_json().as_bytes()).unwrap(), p);
        let mut bad = p;
        bad.alpha_freq = 20.0;
        assert!(bad.validate().is_err());
        bad = p;
        bad.alpha_amp = -1.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn fixed_distribution_only_changes_seed() {
        let base = SyntheticSubjectProfile::default();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let a = ProfileDistribution::fixed(base).sample(&mut rng);
        assert_eq!(SyntheticSubjectProfile { seed: base.seed, ..a }, base);
    }

    #[test]
    fn fitting_noise_decays() {
        let f = FittingModel { initial_extra_sigma: 40.0, decay_seconds: 10.0 };
        assert_eq!(f.extra_sigma_at(0.0), 40.0);
        assert!((f.extra_sigma_at(10.0) - 40.0 / std::f64::consts::E).abs() < 1e-12);
    }
}
