use std::fmt;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use rand::rngs::OsRng;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::DatastoreError;

/// Random bytes in a subject token.
pub const SUBJECT_ID_BYTES: usize = 16;
const ENCODED_LEN: usize = 22;

/// Pseudonymous subject token: 128 random bits, URL-safe base64 without
/// padding. Never derived from personal data.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SubjectId(String);

impl SubjectId {
    pub fn from_bytes(bytes: [u8; SUBJECT_ID_BYTES]) -> Self {
        Self(URL_SAFE_NO_PAD.encode(bytes))
    }

    pub fn parse(s: &str) -> Result<Self, DatastoreError> {
        let ok = s.len() == ENCODED_LEN
            && URL_SAFE_NO_PAD.decode(s).map(|b| b.len() == SUBJECT_ID_BYTES).unwrap_or(false)
            // Canonical encodings only, so the text round-trips.
            && URL_SAFE_NO_PAD.encode(URL_SAFE_NO_PAD.decode(s).unwrap_or_default()) == s;
        if ok {
            Ok(Self(s.to_string()))
        } else {
            Err(DatastoreError::InvalidSubjectId(s.chars().take(40).collect()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SubjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for SubjectId {
    type Error = DatastoreError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::parse(&s)
    }
}

impl From<SubjectId> for String {
    fn from(id: SubjectId) -> String {
        id.0
    }
}

/// Draws a fresh token from the operating system RNG. Fails rather than
/// falling back to a weaker source.
pub fn generate_subject_id() -> Result<SubjectId, DatastoreError> {
    let mut bytes = [0u8; SUBJECT_ID_BYTES];
    OsRng.try_fill_bytes(&mut bytes).map_err(|e| DatastoreError::Rng(e.to_string()))?;
    Ok(SubjectId::from_bytes(bytes))
}
