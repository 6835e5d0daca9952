//! Announcement messages pulled from the server in the background.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::transport::Transport;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Message {
    pub id: String,
    pub locale: String,
    pub text: String,
}

/// Parses a JSON array of messages. Items that do not parse or have an
/// empty id are skipped with a warning.
pub fn parse_messages(body: &[u8]) -> Vec<Message> {
    let items: Vec<serde_json::Value> = match serde_json::from_slice(body) {
        Ok(v) => v,
        Err(e) => {
            log::warn!("message payload is not a JSON array: {e}");
            return Vec::new();
        }
    };
    items
        .into_iter()
        .enumerate()
        .filter_map(|(i, v)| match serde_json::from_value::<Message>(v) {
            Ok(m) if !m.id.is_empty() => Some(m),
            Ok(_) => {
                log::warn!("message {i} has an empty id, skipped");
                None
            }
            Err(e) => {
                log::warn!("message {i} malformed, skipped: {e}");
                None
            }
        })
        .collect()
}

/// Ids already surfaced to the participant.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
pub struct MessageInbox {
    seen: HashSet<String>,
}

impl MessageInbox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn seen(&self, id: &str) -> bool {
        self.seen.contains(id)
    }
}

/// Fetches announcements and returns those not seen before. Never fails:
/// an unreachable transport yields an empty list.
pub fn fetch_messages(transport: &dyn Transport, locale: &str, inbox: &mut MessageInbox) -> Vec<Message> {
    let body = match transport.get_messages(locale) {
        Ok(b) => b,
        Err(e) => {
            log::info!("messages unavailable: {e}");
            return Vec::new();
        }
    };
    parse_messages(&body).into_iter().filter(|m| inbox.seen.insert(m.id.clone())).collect()
}
