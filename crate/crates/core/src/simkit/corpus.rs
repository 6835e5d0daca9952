use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::generate::{gen_segment, sim_rng, SegmentSpec};
use super::profile::{ProfileDistribution, SyntheticSubjectProfile};
use super::SimError;
use crate::datastore::{marker_codes, Marker, RecordingDataset, RecordingMetadata, SubjectId};
use crate::decoder::TaskDataset;
use crate::features::{extract_trial_features, extract_trials, format_trial_label, normalize_features, Label, NormalizationGroup};
use crate::{CHANNELS, CHANNEL_LABELS, SAMPLE_RATE_HZ};

/// Rest between consecutive trials, unlabelled.
pub const INTER_TRIAL_SECONDS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialPlan {
    pub task_id: String,
    pub label: Label,
    pub seconds: u32,
}

/// Where a synthetic recording belongs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordingInfo {
    pub subject_id: SubjectId,
    pub scenario_id: String,
    pub strategy: String,
    pub day: u8,
    pub block: u32,
}

pub fn sensor_locations() -> std::collections::BTreeMap<String, String> {
    CHANNEL_LABELS.iter().map(|l| (l.to_string(), format!("10-20:{l}"))).collect()
}

/// Records `trials` back to back with a short rest in between. Markers
/// bracket the block and every trial; timestamps are left to the caller.
pub fn gen_recording(
    profile: &SyntheticSubjectProfile,
    info: &RecordingInfo,
    trials: &[TrialPlan],
    seed: u64,
) -> Result<RecordingDataset, SimError> {
    profile.validate()?;
    let fs = SAMPLE_RATE_HZ as f64;
    let mut rng = sim_rng(profile.seed, seed);
    let gap = (INTER_TRIAL_SECONDS * fs) as usize;
    let mut channels: [Vec<f64>; CHANNELS] = Default::default();
    let mut markers = vec![Marker { sample_index: 0, code: marker_codes::BLOCK_START, label: info.strategy.clone() }];
    for (i, t) in trials.iter().enumerate() {
        if i > 0 {
            let rest = gen_segment(profile, &SegmentSpec { samples: gap, sample_rate: fs, alpha_mult: [1.0; CHANNELS], extra_sigma: 0.0 }, &mut rng);
            for (c, r) in channels.iter_mut().zip(rest) {
                c.extend(r);
            }
        }
        let start = channels[0].len() as u64;
        let spec = SegmentSpec {
            samples: t.seconds as usize * SAMPLE_RATE_HZ as usize,
            sample_rate: fs,
            alpha_mult: profile.task_modulation.for_label(t.label),
            extra_sigma: 0.0,
        };
        for (c, seg) in channels.iter_mut().zip(gen_segment(profile, &spec, &mut rng)) {
            c.extend(seg);
        }
        let label = format_trial_label(&t.task_id, t.label);
        markers.push(Marker { sample_index: start, code: marker_codes::TRIAL_START, label: label.clone() });
        markers.push(Marker { sample_index: channels[0].len() as u64, code: marker_codes::TRIAL_END, label });
    }
    let frames = channels[0].len();
    markers.push(Marker { sample_index: frames as u64, code: marker_codes::BLOCK_END, label: info.strategy.clone() });
    let mut samples = Vec::with_capacity(frames * CHANNELS);
    for i in 0..frames {
        for c in &channels {
            samples.push(c[i] as f32);
        }
    }
    let ds = RecordingDataset {
        subject_id: info.subject_id.clone(),
        scenario_id: info.scenario_id.clone(),
        day: info.day,
        sample_rate: SAMPLE_RATE_HZ,
        channel_labels: CHANNEL_LABELS.iter().map(|s| s.to_string()).collect(),
        samples,
        markers,
        metadata: RecordingMetadata {
            locale: "en".into(),
            sensor_locations: sensor_locations(),
            strategy: Some(info.strategy.clone()),
            block: Some(info.block),
            ..Default::default()
        },
    };
    ds.validate()?;
    Ok(ds)
}

/// Balanced, shuffled trial list: half positive, half negative.
pub fn balanced_trials<R: Rng>(n: usize, seconds: u32, positive: &str, negative: &str, rng: &mut R) -> Vec<TrialPlan> {
    let mut trials: Vec<TrialPlan> = (0..n)
        .map(|i| {
            let (task_id, label) = if i % 2 == 0 { (positive, Label::Positive) } else { (negative, Label::Negative) };
            TrialPlan { task_id: task_id.into(), label, seconds }
        })
        .collect();
    trials.shuffle(rng);
    trials
}

/// Lab-style recordings: one subject per recording, `trials_per_subject`
/// balanced 30 s trials of a memory-versus-subtraction strategy.
pub fn gen_lab_recordings(
    n_subjects: usize,
    trials_per_subject: usize,
    dist: &ProfileDistribution,
    seed: u64,
) -> Result<Vec<RecordingDataset>, SimError> {
    if n_subjects < 2 {
        return Err(SimError::InvalidArgument(format!("at least 2 subjects required, got {n_subjects}")));
    }
    if trials_per_subject < 2 {
        return Err(SimError::InvalidArgument("at least 2 trials per subject required".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n_subjects)
        .map(|s| {
            let profile = dist.sample(&mut rng);
            let subject_id = SubjectId::from_bytes(rng.gen());
            let trials = balanced_trials(trials_per_subject, 30, "positive_memory", "mental_subtraction", &mut rng);
            let info = RecordingInfo {
                subject_id,
                scenario_id: "lab".into(),
                strategy: "lab".into(),
                day: 1,
                block: s as u32,
            };
            gen_recording(&profile, &info, &trials, rng.gen())
        })
        .collect()
}

/// Featurizes recordings, normalizes per subject session and returns one
/// task per subject.
pub fn recordings_to_tasks(recordings: &[RecordingDataset], grouping: NormalizationGroup) -> Result<Vec<TaskDataset>, SimError> {
    let mut features = Vec::new();
    for ds in recordings {
        for t in extract_trials(ds)? {
            features.push(extract_trial_features(&t)?);
        }
    }
    let normalized = normalize_features(&features, grouping)?;
    let mut groups: std::collections::BTreeMap<(String, u8, String), Vec<_>> = Default::default();
    for v in normalized {
        groups.entry((v.meta.subject.clone(), v.meta.day, v.meta.strategy.clone())).or_default().push(v);
    }
    groups.into_values().map(|vs| TaskDataset::from_features(&vs).map_err(SimError::from)).collect()
}

/// Synthetic lab corpus as normalized decoder tasks.
pub fn gen_lab_corpus(
    n_subjects: usize,
    trials_per_subject: usize,
    dist: &ProfileDistribution,
    seed: u64,
) -> Result<Vec<TaskDataset>, SimError> {
    recordings_to_tasks(&gen_lab_recordings(n_subjects, trials_per_subject, dist, seed)?, NormalizationGroup::LabSession)
}
