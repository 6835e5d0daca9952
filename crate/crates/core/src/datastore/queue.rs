//! Store-and-forward upload queue.
//!
//! Entries are appended in creation order and persisted as a JSON file next
//! to the envelopes they reference. Only transport acknowledgments that echo
//! the entry id mark an entry sent.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use super::transport::Transport;
use super::{encrypt_envelope, DatastoreError, RecipientPublicKey, RecordingDataset, SubjectId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryState {
    Pending,
    Sent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UploadQueueEntry {
    pub id: String,
    pub envelope_path: PathBuf,
    pub subject: SubjectId,
    /// Milliseconds since the study epoch.
    pub created_at: u64,
    pub attempts: u32,
    pub state: EntryState,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct QueueState {
    next_seq: u64,
    entries: Vec<UploadQueueEntry>,
}

#[derive(Debug)]
pub struct UploadQueue {
    file: Option<PathBuf>,
    state: Mutex<QueueState>,
    flush: Mutex<()>,
}

/// Result of one upload attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlushOutcome {
    pub id: String,
    pub result: Result<(), String>,
}

impl UploadQueue {
    /// Queue that lives only in memory.
    pub fn in_memory() -> Self {
        Self { file: None, state: Mutex::new(QueueState::default()), flush: Mutex::new(()) }
    }

    /// Opens or creates a queue persisted at `file`.
    pub fn open(file: impl Into<PathBuf>) -> Result<Self, DatastoreError> {
        let file = file.into();
        let state = match fs::read(&file) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| DatastoreError::QueueCorrupt(e.to_string()))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => QueueState::default(),
            Err(e) => return Err(DatastoreError::io(&file, e)),
        };
        Ok(Self { file: Some(file), state: Mutex::new(state), flush: Mutex::new(()) })
    }

    fn persist(&self, state: &QueueState) -> Result<(), DatastoreError> {
        let Some(file) = &self.file else { return Ok(()) };
        let tmp = file.with_extension("tmp");
        let bytes = serde_json::to_vec_pretty(state).expect("queue serializes");
        fs::write(&tmp, bytes).map_err(|e| DatastoreError::io(&tmp, e))?;
        fs::rename(&tmp, file).map_err(|e| DatastoreError::io(file, e))
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, QueueState> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Appends a pending entry and returns its id.
    pub fn enqueue(&self, envelope_path: PathBuf, subject: SubjectId, created_at: u64) -> Result<String, DatastoreError> {
        let mut st = self.lock();
        let id = format!("e{:06}", st.next_seq);
        st.next_seq += 1;
        st.entries.push(UploadQueueEntry { id: id.clone(), envelope_path, subject, created_at, attempts: 0, state: EntryState::Pending });
        self.persist(&st)?;
        Ok(id)
    }

    /// Reserves the next entry id, for callers that need the id before the
    /// envelope path exists.
    fn next_id(&self) -> String {
        format!("e{:06}", self.lock().next_seq)
    }

    pub fn entries(&self) -> Vec<UploadQueueEntry> {
        self.lock().entries.clone()
    }

    pub fn pending(&self) -> Vec<UploadQueueEntry> {
        self.lock().entries.iter().filter(|e| e.state == EntryState::Pending).cloned().collect()
    }

    fn record(&self, id: &str, ok: bool) -> Result<(), DatastoreError> {
        let mut st = self.lock();
        if let Some(e) = st.entries.iter_mut().find(|e| e.id == id) {
            e.attempts += 1;
            if ok {
                e.state = EntryState::Sent;
            }
        }
        self.persist(&st)
    }
}

/// Attempts every pending entry, oldest first. Entries enqueued during the
/// flush wait for the next one.
///
/// Returns one outcome per attempted entry. If entries were attempted and
/// all of them failed, returns [`DatastoreError::UploadsFailed`] instead;
/// attempt counts are updated either way.
pub fn flush_uploads(queue: &UploadQueue, transport: &dyn Transport) -> Result<Vec<FlushOutcome>, DatastoreError> {
    let _guard = match queue.flush.try_lock() {
        Ok(g) => g,
        Err(std::sync::TryLockError::WouldBlock) => return Err(DatastoreError::FlushInProgress),
        Err(std::sync::TryLockError::Poisoned(p)) => p.into_inner(),
    };
    let mut pending = queue.pending();
    pending.sort_by_key(|e| (e.created_at, e.id.clone()));
    let mut outcomes = Vec::with_capacity(pending.len());
    for entry in pending {
        let result = fs::read(&entry.envelope_path)
            .map_err(|e| format!("{}: {e}", entry.envelope_path.display()))
            .and_then(|body| transport.post_recording(&entry.id, &entry.subject, &body).map_err(|e| e.to_string()))
            .and_then(|echo| if echo == entry.id { Ok(()) } else { Err(format!("acknowledged {echo:?}, expected {:?}", entry.id)) });
        if let Err(msg) = &result {
            log::warn!("upload of {} failed: {msg}", entry.id);
        }
        queue.record(&entry.id, result.is_ok())?;
        outcomes.push(FlushOutcome { id: entry.id, result });
    }
    if !outcomes.is_empty() && outcomes.iter().all(|o| o.result.is_err()) {
        let last = outcomes.last().and_then(|o| o.result.clone().err()).unwrap_or_default();
        return Err(DatastoreError::UploadsFailed { attempted: outcomes.len(), last });
    }
    Ok(outcomes)
}

/// Serializes, encrypts and writes a recording into `dir`, then queues it.
/// Only the envelope touches the disk.
pub fn store_recording<R: RngCore + CryptoRng>(
    ds: &RecordingDataset,
    recipient: &RecipientPublicKey,
    dir: &Path,
    queue: &UploadQueue,
    created_at: u64,
    rng: &mut R,
) -> Result<(String, PathBuf), DatastoreError> {
    store_sealed(&ds.to_bytes()?, &ds.subject_id, recipient, dir, queue, created_at, rng)
}

pub fn store_sealed<R: RngCore + CryptoRng>(
    plain: &[u8],
    subject: &SubjectId,
    recipient: &RecipientPublicKey,
    dir: &Path,
    queue: &UploadQueue,
    created_at: u64,
    rng: &mut R,
) -> Result<(String, PathBuf), DatastoreError> {
    let env = encrypt_envelope(plain, recipient, rng)?;
    fs::create_dir_all(dir).map_err(|e| DatastoreError::io(dir, e))?;
    let path = dir.join(format!("{}.myne", queue.next_id()));
    fs::write(&path, env.to_bytes()).map_err(|e| DatastoreError::io(&path, e))?;
    let id = queue.enqueue(path.clone(), subject.clone(), created_at)?;
    Ok((id, path))
}
