use std::time::{Duration, Instant};

use super::SimError;
use crate::datastore::RecordingDataset;
use crate::streamkit::EegFrame;
use crate::CHANNELS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pacing {
    /// One frame per sample period of wall-clock time.
    RealTime,
    /// As fast as the consumer pulls.
    Accelerated,
}

/// Frames of a recording in sample order.
#[derive(Debug)]
pub struct StreamHandle {
    dataset: RecordingDataset,
    pacing: Pacing,
    next: usize,
    started: Option<Instant>,
}

impl StreamHandle {
    pub fn dataset(&self) -> &RecordingDataset {
        &self.dataset
    }

    pub fn remaining(&self) -> usize {
        self.dataset.frame_count() - self.next
    }
}

impl Iterator for StreamHandle {
    type Item = EegFrame;

    fn next(&mut self) -> Option<EegFrame> {
        if self.next >= self.dataset.frame_count() {
            return None;
        }
        if self.pacing == Pacing::RealTime {
            let start = *self.started.get_or_insert_with(Instant::now);
            let due = start + Duration::from_secs_f64(self.next as f64 / self.dataset.sample_rate as f64);
            let now = Instant::now();
            if due > now {
                std::thread::sleep(due - now);
            }
        }
        let f = self.dataset.frame(self.next);
        let frame = EegFrame { sample_index: self.next as u64, channels: [f[0], f[1], f[2], f[3]] };
        self.next += 1;
        Some(frame)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining(), Some(self.remaining()))
    }
}

/// Streams a four-channel recording frame by frame.
pub fn replay_stream(dataset: RecordingDataset, pacing: Pacing) -> Result<StreamHandle, SimError> {
    dataset.validate()?;
    if dataset.channel_count() != CHANNELS {
        return Err(SimError::InvalidArgument(format!("replay needs {CHANNELS} channels, got {}", dataset.channel_count())));
    }
    if dataset.sample_rate == 0 {
        return Err(SimError::InvalidArgument("sample rate is zero".into()));
    }
    Ok(StreamHandle { dataset, pacing, next: 0, started: None })
}
