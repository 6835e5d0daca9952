//! Spectral trial features and effect-size maps.
//!
//! Each trial yields sixteen values: for every channel the theta, alpha and
//! beta log-band-power and the dominant frequency, in channel-major order.

mod r2;
mod recording;
pub mod spectral;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{CHANNELS, CHANNEL_LABELS};

pub use r2::{average_r2_maps, r2_map, R2Map};
pub use recording::{extract_trials, format_trial_label, parse_trial_label};
pub use spectral::{dominant_frequency, log_band_power, periodogram, psd_welch, SpectralEstimate};

/// Theta band edges in Hz.
pub const THETA: (f64, f64) = (3.0, 7.0);
/// Alpha band edges in Hz.
pub const ALPHA: (f64, f64) = (8.0, 13.0);
/// Beta band edges in Hz.
pub const BETA: (f64, f64) = (17.0, 30.0);

/// Per-channel feature kinds, in storage order.
pub const FEATURE_KINDS: [&str; 4] = ["theta", "alpha", "beta", "dominant_freq"];

/// Length of a trial feature vector.
pub const FEATURE_DIM: usize = CHANNELS * FEATURE_KINDS.len();

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("signal has {len} samples, at least {needed} required")]
    TooShort { len: usize, needed: usize },
    #[error("no frequency bins in band {lo}..={hi} Hz")]
    EmptyBand { lo: f64, hi: f64 },
    #[error("band {lo}..={hi} Hz lies outside the grid (nyquist {nyquist} Hz)")]
    BandOutsideGrid { lo: f64, hi: f64, nyquist: f64 },
    #[error("trial has {0} channels, expected 4")]
    ChannelCount(usize),
    #[error("trial channels have unequal lengths")]
    RaggedChannels,
    #[error("trial contains non-finite samples")]
    NonFinite,
    #[error("normalization group {group} has {size} vectors, at least 2 required")]
    GroupTooSmall { group: String, size: usize },
    #[error("labels and features have different lengths ({labels} vs {features})")]
    LengthMismatch { labels: usize, features: usize },
    #[error("both task labels must be present")]
    SingleClass,
    #[error("nothing to average")]
    Empty,
    #[error("csv export failed: {0}")]
    Export(String),
    #[error("trial marker label {0:?} is not <task>:<+1|-1>")]
    BadTrialLabel(String),
}

/// Binary task label: the first task of a strategy is positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    pub fn from_sign(value: f64) -> Option<Self> {
        if value > 0.0 {
            Some(Label::Positive)
        } else if value < 0.0 {
            Some(Label::Negative)
        } else {
            None
        }
    }
}

/// Where a trial came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrialMeta {
    pub subject: String,
    pub day: u8,
    pub strategy: String,
    pub trial: u32,
    pub label: Label,
}

/// One trial of multichannel EEG in microvolts.
#[derive(Debug, Clone)]
pub struct TrialWindow {
    /// `channels[c][i]` is sample `i` of channel `c`.
    pub channels: Vec<Vec<f64>>,
    pub sample_rate: f64,
    pub meta: TrialMeta,
}

impl TrialWindow {
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_seconds(&self) -> f64 {
        self.len() as f64 / self.sample_rate
    }

    fn validate(&self) -> Result<(), FeatureError> {
        if self.channels.len() != CHANNELS {
            return Err(FeatureError::ChannelCount(self.channels.len()));
        }
        let n = self.len();
        if self.channels.iter().any(|c| c.len() != n) {
            return Err(FeatureError::RaggedChannels);
        }
        if self.channels.iter().flatten().any(|x| !x.is_finite()) {
            return Err(FeatureError::NonFinite);
        }
        Ok(())
    }
}

/// Sixteen trial features plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: [f64; FEATURE_DIM],
    pub normalized: bool,
    pub meta: TrialMeta,
}

/// Column names matching [`FeatureVector::values`].
pub fn feature_names() -> Vec<String> {
    CHANNEL_LABELS
        .iter()
        .flat_map(|ch| FEATURE_KINDS.iter().map(move |k| format!("{ch}_{k}")))
        .collect()
}

/// Computes the sixteen features of one trial.
pub fn extract_trial_features(trial: &TrialWindow) -> Result<FeatureVector, FeatureError> {
    trial.validate()?;
    let mut values = [0.0; FEATURE_DIM];
    for (c, channel) in trial.channels.iter().enumerate() {
        let psd = psd_welch(channel, trial.sample_rate)?;
        let base = c * FEATURE_KINDS.len();
        values[base] = log_band_power(&psd, THETA.0, THETA.1)?;
        values[base + 1] = log_band_power(&psd, ALPHA.0, ALPHA.1)?;
        values[base + 2] = log_band_power(&psd, BETA.0, BETA.1)?;
        values[base + 3] = dominant_frequency(&psd)?;
    }
    Ok(FeatureVector { values, normalized: false, meta: trial.meta.clone() })
}

/// Which trials share normalization statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormalizationGroup {
    /// One group per subject and strategy across the whole lab session.
    LabSession,
    /// One group per subject, day and strategy at home.
    HomeDay,
}

impl NormalizationGroup {
    fn key(self, meta: &TrialMeta) -> String {
        match self {
            NormalizationGroup::LabSession => format!("{}/{}", meta.subject, meta.strategy),
            NormalizationGroup::HomeDay => {
                format!("{}/day{}/{}", meta.subject, meta.day, meta.strategy)
            }
        }
    }
}

/// Z-scores every feature dimension within each group, using the population
/// standard deviation. Dimensions without spread map to 0. Output order
/// matches input order.
pub fn normalize_features(
    vectors: &[FeatureVector],
    grouping: NormalizationGroup,
) -> Result<Vec<FeatureVector>, FeatureError> {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, v) in vectors.iter().enumerate() {
        groups.entry(grouping.key(&v.meta)).or_default().push(i);
    }
    let mut out = vectors.to_vec();
    for (group, members) in groups {
        if members.len() < 2 {
            return Err(FeatureError::GroupTooSmall { group, size: members.len() });
        }
        let n = members.len() as f64;
        for d in 0..FEATURE_DIM {
            let mean = members.iter().map(|&i| vectors[i].values[d]).sum::<f64>() / n;
            let var = members
                .iter()
                .map(|&i| (vectors[i].values[d] - mean).powi(2))
                .sum::<f64>()
                / n;
            let sd = var.sqrt();
            for &i in &members {
                out[i].values[d] =
                    if sd > f64::EPSILON * mean.abs().max(1.0) { (vectors[i].values[d] - mean) / sd } else { 0.0 };
            }
        }
        for &i in &members {
            out[i].normalized = true;
        }
    }
    Ok(out)
}

/// Writes a delimited feature table with a header row:
/// `subject,day,strategy,trial,label,<16 feature columns>`.
pub fn write_feature_table<W: Write>(writer: W, vectors: &[FeatureVector]) -> Result<(), FeatureError> {
    let err = |e: csv::Error| FeatureError::Export(e.to_string());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["subject".to_string(), "day".into(), "strategy".into(), "trial".into(), "label".into()];
    header.extend(feature_names());
    w.write_record(&header).map_err(err)?;
    for v in vectors {
        let mut row = vec![
            v.meta.subject.clone(),
            v.meta.day.to_string(),
            v.meta.strategy.clone(),
            v.meta.trial.to_string(),
            format!("{}", v.meta.label.sign()),
        ];
        row.extend(v.values.iter().map(|x| x.to_string()));
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| FeatureError::Export(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(subject: &str, day: u8, trial: u32, label: Label) -> TrialMeta {
        TrialMeta { subject: subject.into(), day, strategy: "pm".into(), trial, label }
    }

    fn fv(values: [f64; FEATURE_DIM], m: TrialMeta) -> FeatureVector {
        FeatureVector { values, normalized: false, meta: m }
    }

    #[test]
    fn two_vector_group_maps_to_minus_one_plus_one() {
        let mut a = [0.0; FEATURE_DIM];
        let mut b = [0.0; FEATURE_DIM];
        a[0] = 3.0;
        b[0] = 7.0;
        a[1] = 5.0;
        b[1] = -1.0;
        let out = normalize_features(
            &[fv(a, meta("s", 1, 0, Label::Positive)), fv(b, meta("s", 1, 1, Label::Negative))],
            NormalizationGroup::HomeDay,
        )
        .unwrap();
        assert_eq!(out[0].values[0], -1.0);
        assert_eq!(out[1].values[0], 1.0);
        assert_eq!(out[0].values[1], 1.0);
        assert_eq!(out[1].values[1], -1.0);
        // Remaining dimensions are constant.
        assert!(out.iter().all(|v| v.values[2..].iter().all(|&x| x == 0.0)));
        assert!(out.iter().all(|v| v.normalized));
    }

    #[test]
    fn groups_are_normalized_separately() {
        let vectors: Vec<FeatureVector> = (0..6)
            .map(|i| {
                let mut x = [0.0; FEATURE_DIM];
                for (d, slot) in x.iter_mut().enumerate() {
                    *slot = (i * (d + 1)) as f64 + if i < 3 { 100.0 } else { 0.0 };
                }
                fv(x, meta("s", if i < 3 { 1 } else { 2 }, i as u32, Label::Positive))
            })
            .collect();
        let out = normalize_features(&vectors, NormalizationGroup::HomeDay).unwrap();
        for day in [1u8, 2] {
            let members: Vec<_> = out.iter().filter(|v| v.meta.day == day).collect();
            for d in 0..FEATURE_DIM {
                let mean = members.iter().map(|v| v.values[d]).sum::<f64>() / 3.0;
                let var = members.iter().map(|v| (v.values[d] - mean).powi(2)).sum::<f64>() / 3.0;
                assert!(mean.abs() < 1e-12);
                assert!((var - 1.0).abs() < 1e-12);
            }
        }
        // The lab grouping pools both days into one group.
        let pooled = normalize_features(&vectors, NormalizationGroup::LabSession).unwrap();
        assert_ne!(pooled[0].values, out[0].values);
    }

    #[test]
    fn singleton_group_is_an_error() {
        let err = normalize_features(&[fv([0.0; FEATURE_DIM], meta("s", 1, 0, Label::Positive))], NormalizationGroup::HomeDay)
            .unwrap_err();
        assert!(matches!(err, FeatureError::GroupTooSmall { size: 1, .. }));
    }

    #[test]
    fn feature_names_are_channel_major() {
        let names = feature_names();
        assert_eq!(names.len(), 16);
        assert_eq!(names[0], "AF7_theta");
        assert_eq!(names[5], "AF8_alpha");
        assert_eq!(names[15], "TP10_dominant_freq");
    }

    #[test]
    fn rejects_malformed_trials() {
        let m = meta("s", 1, 0, Label::Positive);
        let three = TrialWindow { channels: vec![vec![0.0; 1024]; 3], sample_rate: 256.0, meta: m.clone() };
        assert_eq!(extract_trial_features(&three).unwrap_err(), FeatureError::ChannelCount(3));
        let mut nan = TrialWindow { channels: vec![vec![0.0; 1024]; 4], sample_rate: 256.0, meta: m };
        nan.channels[2][10] = f64::NAN;
        assert_eq!(extract_trial_features(&nan).unwrap_err(), FeatureError::NonFinite);
    }

    #[test]
    fn feature_table_has_header_and_rows() {
        let mut buf = Vec::new();
        write_feature_table(&mut buf, &[fv([1.5; FEATURE_DIM], meta("abc", 3, 4, Label::Negative))]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("subject,day,strategy,trial,label,AF7_theta"));
        assert!(lines.next().unwrap().starts_with("abc,3,pm,4,-1,1.5"));
    }
}
