//! Upload transports. See `docs/http-protocol.md` for the HTTP wire format.

use std::fs;
use std::io::Read;
use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

use super::SubjectId;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TransportError {
    #[error("transport unreachable: {0}")]
    Unreachable(String),
    #[error("server rejected request with status {0}")]
    Status(u16),
    #[error("bad server response: {0}")]
    BadResponse(String),
}

pub trait Transport {
    /// Uploads one envelope. Returns the entry id echoed by the receiver.
    fn post_recording(&self, entry_id: &str, subject: &SubjectId, envelope: &[u8]) -> Result<String, TransportError>;

    /// Raw announcement payload for `locale`.
    fn get_messages(&self, locale: &str) -> Result<Vec<u8>, TransportError>;
}

/// Local directory drop: envelopes land in `<root>/recordings/<subject>/`,
/// announcements are read from `<root>/messages.json`.
#[derive(Debug, Clone)]
pub struct DirTransport {
    root: PathBuf,
}

impl DirTransport {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn recording_path(&self, subject: &SubjectId, entry_id: &str) -> PathBuf {
        self.root.join("recordings").join(subject.as_str()).join(format!("{entry_id}.myne"))
    }
}

fn valid_entry_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

impl Transport for DirTransport {
    fn post_recording(&self, entry_id: &str, subject: &SubjectId, envelope: &[u8]) -> Result<String, TransportError> {
        if !valid_entry_id(entry_id) {
            return Err(TransportError::BadResponse(format!("invalid entry id {entry_id:?}")));
        }
        if !self.root.is_dir() {
            return Err(TransportError::Unreachable(format!("{} is not a directory", self.root.display())));
        }
        let path = self.recording_path(subject, entry_id);
        let unreachable = |e: std::io::Error| TransportError::Unreachable(e.to_string());
        fs::create_dir_all(path.parent().unwrap()).map_err(unreachable)?;
        let tmp = path.with_extension("part");
        fs::write(&tmp, envelope).map_err(unreachable)?;
        fs::rename(&tmp, &path).map_err(unreachable)?;
        Ok(entry_id.to_string())
    }

    fn get_messages(&self, locale: &str) -> Result<Vec<u8>, TransportError> {
        if !self.root.is_dir() {
            return Err(TransportError::Unreachable(format!("{} is not a directory", self.root.display())));
        }
        let localized = self.root.join(format!("messages.{locale}.json"));
        let path = if localized.is_file() { localized } else { self.root.join("messages.json") };
        match fs::read(&path) {
            Ok(b) => Ok(b),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(b"[]".to_vec()),
            Err(e) => Err(TransportError::Unreachable(e.to_string())),
        }
    }
}

/// HTTP adapter: `POST {base}/recordings` and `GET {base}/messages?locale=`.
#[derive(Debug, Clone)]
pub struct HttpTransport {
    base: String,
    agent: ureq::Agent,
}

pub const SUBJECT_HEADER: &str = "X-Subject-Token";
pub const ENTRY_HEADER: &str = "X-Entry-Id";
const MAX_RESPONSE: u64 = 1 << 20;

impl HttpTransport {
    pub fn new(base: &str, timeout: Duration) -> Self {
        Self {
            base: base.trim_end_matches('/').to_string(),
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }
}

fn map_ureq(e: ureq::Error) -> TransportError {
    match e {
        ureq::Error::Status(code, _) => TransportError::Status(code),
        ureq::Error::Transport(t) => TransportError::Unreachable(t.to_string()),
    }
}

fn read_body(resp: ureq::Response) -> Result<Vec<u8>, TransportError> {
    let mut body = Vec::new();
    resp.into_reader()
        .take(MAX_RESPONSE)
        .read_to_end(&mut body)
        .map_err(|e| TransportError::Unreachable(e.to_string()))?;
    Ok(body)
}

impl Transport for HttpTransport {
    fn post_recording(&self, entry_id: &str, subject: &SubjectId, envelope: &[u8]) -> Result<String, TransportError> {
        let resp = self
            .agent
            .post(&format!("{}/recordings", self.base))
            .set("Content-Type", "application/octet-stream")
            .set(SUBJECT_HEADER, subject.as_str())
            .set(ENTRY_HEADER, entry_id)
            .send_bytes(envelope)
            .map_err(map_ureq)?;
        let body = read_body(resp)?;
        #[derive(serde::Deserialize)]
        struct Ack {
            id: String,
        }
        let ack: Ack = serde_json::from_slice(&body).map_err(|e| TransportError::BadResponse(e.to_string()))?;
        Ok(ack.id)
    }

    fn get_messages(&self, locale: &str) -> Result<Vec<u8>, TransportError> {
        let resp = self
            .agent
            .get(&format!("{}/messages", self.base))
            .query("locale", locale)
            .call()
            .map_err(map_ureq)?;
        read_body(resp)
    }
}
