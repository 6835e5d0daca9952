//! Recording storage: the bit-exact container, the encryption envelope,
//! pseudonymous subject tokens and store-and-forward uploads.

mod container;
mod envelope;
mod messages;
mod queue;
mod results;
mod subject;
mod transport;

use thiserror::Error;

pub use container::{
    marked_trials, marker_codes, ContainerError, Marker, MarkedTrial, QualityPoint, RecordingDataset,
    RecordingMetadata, DATASET_MAGIC, DATASET_VERSION,
};
pub use envelope::{
    decrypt_envelope, encrypt_envelope, open_envelope_bytes, EncryptedEnvelope, EnvelopeError, RecipientPublicKey,
    RecipientSecretKey, AEAD_CHACHA20_POLY1305, ENVELOPE_MAGIC, ENVELOPE_VERSION, KEM_X25519_HKDF_SHA256,
};
pub use messages::{fetch_messages, parse_messages, Message, MessageInbox};
pub use queue::{flush_uploads, store_recording, store_sealed, EntryState, FlushOutcome, UploadQueue, UploadQueueEntry};
pub use results::{QuestionnaireResponse, QuestionnaireResults};
pub use subject::{generate_subject_id, SubjectId, SUBJECT_ID_BYTES};
pub use transport::{DirTransport, HttpTransport, Transport, TransportError};

#[derive(Debug, Error)]
pub enum DatastoreError {
    #[error("invalid subject id {0:?}")]
    InvalidSubjectId(String),
    #[error("secure random source unavailable: {0}")]
    Rng(String),
    #[error(transparent)]
    Container(#[from] ContainerError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("queue file is corrupt: {0}")]
    QueueCorrupt(String),
    #[error("another flush is in progress")]
    FlushInProgress,
    #[error("all {attempted} pending uploads failed; last error: {last}")]
    UploadsFailed { attempted: usize, last: String },
    #[error("malformed questionnaire results: {0}")]
    Results(String),
}

impl DatastoreError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Self::Io { path: path.as_ref().display().to_string(), source }
    }
}
