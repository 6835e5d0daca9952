//! Recording container.
//!
//! Little-endian layout:
//!
//! ```text
//! magic         4 bytes  "MYND"
//! version       u16      1
//! header_len    u32      length of the header in bytes
//! header        UTF-8 JSON, keys in fixed order, no whitespace
//! samples       frame_count × channels × f32, frame-major
//! ```
//!
//! The header carries identifiers, channel labels, sample rate, frame count,
//! the marker table and recording metadata. Writing a dataset read from a
//! file reproduces that file byte for byte.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::SubjectId;

pub const DATASET_MAGIC: &[u8; 4] = b"MYND";
pub const DATASET_VERSION: u16 = 1;
const PREAMBLE_LEN: usize = 10;

/// Marker codes used by the recorder.
pub mod marker_codes {
    pub const BLOCK_START: i32 = 10;
    pub const BLOCK_END: i32 = 11;
    pub const TRIAL_START: i32 = 1;
    pub const TRIAL_END: i32 = 2;
}

#[derive(Debug, Error, PartialEq)]
pub enum ContainerError {
    #[error("not a recording container")]
    BadMagic,
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u16),
    #[error("container truncated: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("{0} bytes after the sample payload")]
    TrailingBytes(usize),
    #[error("marker at sample {index} outside recording of {frames} frames")]
    MarkerOutOfRange { index: u64, frames: u64 },
    #[error("markers are not sorted by sample index")]
    MarkersUnsorted,
    #[error("{samples} samples do not divide into {channels} channels")]
    SampleCountMismatch { samples: usize, channels: usize },
    #[error("recording has no channels")]
    NoChannels,
    #[error("day {0} outside 1..=7")]
    InvalidDay(u8),
    #[error("invalid subject id")]
    InvalidSubjectId,
    #[error("malformed header: {0}")]
    Header(String),
}

/// A phase boundary in the recording.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marker {
    pub sample_index: u64,
    pub code: i32,
    pub label: String,
}

/// Averaged per-channel quality at a sample index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityPoint {
    pub sample_index: u64,
    pub per_channel: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordingMetadata {
    /// RFC 3339 timestamps.
    pub started_at: String,
    pub ended_at: String,
    pub locale: String,
    pub fitting_time_seconds: Option<f64>,
    /// Channel label to 10-20 position.
    pub sensor_locations: BTreeMap<String, String>,
    pub strategy: Option<String>,
    pub block: Option<u32>,
    pub quality_trace: Vec<QualityPoint>,
    pub extra: BTreeMap<String, String>,
}

/// A marker-annotated multichannel recording.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingDataset {
    pub subject_id: SubjectId,
    pub scenario_id: String,
    pub day: u8,
    pub sample_rate: u32,
    pub channel_labels: Vec<String>,
    /// Frame-major interleaved samples in microvolts.
    pub samples: Vec<f32>,
    pub markers: Vec<Marker>,
    pub metadata: RecordingMetadata,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    subject_id: String,
    scenario_id: String,
    day: u8,
    sample_rate: u32,
    channel_labels: Vec<String>,
    frame_count: u64,
    markers: Vec<Marker>,
    metadata: RecordingMetadata,
}

impl RecordingDataset {
    pub fn channel_count(&self) -> usize {
        self.channel_labels.len()
    }

    pub fn frame_count(&self) -> usize {
        if self.channel_labels.is_empty() {
            0
        } else {
            self.samples.len() / self.channel_labels.len()
        }
    }

    pub fn frame(&self, i: usize) -> &[f32] {
        let c = self.channel_count();
        &self.samples[i * c..(i + 1) * c]
    }

    /// Samples of channel `c` for frames in `range`.
    pub fn channel_slice(&self, c: usize, range: std::ops::Range<usize>) -> Vec<f64> {
        let n = self.channel_count();
        range.map(|i| self.samples[i * n + c] as f64).collect()
    }

    pub fn validate(&self) -> Result<(), ContainerError> {
        if self.channel_labels.is_empty() {
            return Err(ContainerError::NoChannels);
        }
        if self.samples.len() % self.channel_labels.len() != 0 {
            return Err(ContainerError::SampleCountMismatch {
                samples: self.samples.len(),
                channels: self.channel_labels.len(),
            });
        }
        if !(1..=7).contains(&self.day) {
            return Err(ContainerError::InvalidDay(self.day));
        }
        let md = &self.metadata;
        let trace_ok = md.quality_trace.iter().flat_map(|q| &q.per_channel).all(|v| v.is_finite());
        if !trace_ok || md.fitting_time_seconds.is_some_and(|t| !t.is_finite()) {
            return Err(ContainerError::Header("metadata contains non-finite numbers".into()));
        }
        check_markers(&self.markers, self.frame_count() as u64)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, ContainerError> {
        self.validate()?;
        let header = Header {
            subject_id: self.subject_id.as_str().to_string(),
            scenario_id: self.scenario_id.clone(),
            day: self.day,
            sample_rate: self.sample_rate,
            channel_labels: self.channel_labels.clone(),
            frame_count: self.frame_count() as u64,
            markers: self.markers.clone(),
            metadata: self.metadata.clone(),
        };
        let header = serde_json::to_vec(&header).map_err(|e| ContainerError::Header(e.to_string()))?;
        let mut out = Vec::with_capacity(PREAMBLE_LEN + header.len() + 4 * self.samples.len());
        out.extend_from_slice(DATASET_MAGIC);
        out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for s in &self.samples {
            out.extend_from_slice(&s.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ContainerError> {
        if bytes.len() < 4 {
            return Err(ContainerError::Truncated { needed: PREAMBLE_LEN, available: bytes.len() });
        }
        if &bytes[..4] != DATASET_MAGIC {
            return Err(ContainerError::BadMagic);
        }
        if bytes.len() < PREAMBLE_LEN {
            return Err(ContainerError::Truncated { needed: PREAMBLE_LEN, available: bytes.len() });
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != DATASET_VERSION {
            return Err(ContainerError::UnsupportedVersion(version));
        }
        let header_len = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
        let header_end = PREAMBLE_LEN
            .checked_add(header_len)
            .ok_or(ContainerError::Truncated { needed: usize::MAX, available: bytes.len() })?;
        if bytes.len() < header_end {
            return Err(ContainerError::Truncated { needed: header_end, available: bytes.len() });
        }
        let header: Header = serde_json::from_slice(&bytes[PREAMBLE_LEN..header_end])
            .map_err(|e| ContainerError::Header(e.to_string()))?;
        let channels = header.channel_labels.len();
        if channels == 0 {
            return Err(ContainerError::NoChannels);
        }
        let needed = usize::try_from(header.frame_count)
            .ok()
            .and_then(|f| f.checked_mul(channels * 4))
            .and_then(|p| p.checked_add(header_end))
            .ok_or(ContainerError::Truncated { needed: usize::MAX, available: bytes.len() })?;
        if bytes.len() < needed {
            return Err(ContainerError::Truncated { needed, available: bytes.len() });
        }
        if bytes.len() > needed {
            return Err(ContainerError::TrailingBytes(bytes.len() - needed));
        }
        let subject_id = SubjectId::parse(&header.subject_id).map_err(|_| ContainerError::InvalidSubjectId)?;
        let samples = bytes[header_end..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let ds = RecordingDataset {
            subject_id,
            scenario_id: header.scenario_id,
            day: header.day,
            sample_rate: header.sample_rate,
            channel_labels: header.channel_labels,
            samples,
            markers: header.markers,
            metadata: header.metadata,
        };
        ds.validate()?;
        Ok(ds)
    }
}

fn check_markers(markers: &[Marker], frames: u64) -> Result<(), ContainerError> {
    for pair in markers.windows(2) {
        if pair[1].sample_index < pair[0].sample_index {
            return Err(ContainerError::MarkersUnsorted);
        }
    }
    // An end marker may sit one past the last frame.
    if let Some(m) = markers.iter().find(|m| m.sample_index > frames) {
        return Err(ContainerError::MarkerOutOfRange { index: m.sample_index, frames });
    }
    Ok(())
}

/// A labelled trial located by start/end markers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedTrial {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

/// Pairs each trial-start marker with the next trial-end marker.
pub fn marked_trials(ds: &RecordingDataset) -> Vec<MarkedTrial> {
    let mut out = Vec::new();
    let mut open: Option<&Marker> = None;
    for m in &ds.markers {
        match m.code {
            marker_codes::TRIAL_START => open = Some(m),
            marker_codes::TRIAL_END => {
                if let Some(s) = open.take() {
                    if s.label == m.label && m.sample_index > s.sample_index {
                        out.push(MarkedTrial {
                            label: s.label.clone(),
                            start: s.sample_index as usize,
                            end: m.sample_index as usize,
                        });
                    }
                }
            }
            _ => {}
        }
    }
    out
}
