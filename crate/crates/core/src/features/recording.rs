//! Trial windows cut from marker-annotated recordings.
//!
//! Trial markers carry the label `"<task_id>:<+1|-1>"`.

use super::{FeatureError, Label, TrialMeta, TrialWindow};
use crate::datastore::{marked_trials, RecordingDataset};
use crate::CHANNELS;

pub fn format_trial_label(task_id: &str, label: Label) -> String {
    match label {
        Label::Positive => format!("{task_id}:+1"),
        Label::Negative => format!("{task_id}:-1"),
    }
}

pub fn parse_trial_label(text: &str) -> Option<(&str, Label)> {
    let (task, sign) = text.rsplit_once(':')?;
    let label = match sign {
        "+1" => Label::Positive,
        "-1" => Label::Negative,
        _ => return None,
    };
    (!task.is_empty()).then_some((task, label))
}

/// Every marked trial of `ds` as a window, numbered from 0 in marker order.
/// The strategy comes from the recording metadata, falling back to the
/// scenario id.
pub fn extract_trials(ds: &RecordingDataset) -> Result<Vec<TrialWindow>, FeatureError> {
    if ds.channel_count() != CHANNELS {
        return Err(FeatureError::ChannelCount(ds.channel_count()));
    }
    let strategy = ds.metadata.strategy.clone().unwrap_or_else(|| ds.scenario_id.clone());
    let frames = ds.frame_count();
    let mut out = Vec::new();
    for (i, t) in marked_trials(ds).into_iter().enumerate() {
        let (_, label) = parse_trial_label(&t.label).ok_or_else(|| FeatureError::BadTrialLabel(t.label.clone()))?;
        if t.end > frames {
            return Err(FeatureError::TooShort { len: frames, needed: t.end });
        }
        let channels = (0..CHANNELS).map(|c| ds.channel_slice(c, t.start..t.end)).collect();
        out.push(TrialWindow {
            channels,
            sample_rate: ds.sample_rate as f64,
            meta: TrialMeta {
                subject: ds.subject_id.to_string(),
                day: ds.day,
                strategy: strategy.clone(),
                trial: i as u32,
                label,
            },
        });
    }
    Ok(out)
}
