//! Questionnaire definitions (one JSON file per questionnaire and locale)
//! and response collection.

use serde::{Deserialize, Serialize};

use super::SessionError;
use crate::datastore::QuestionnaireResponse;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ItemKind {
    /// Integer rating from 1 to `scale`.
    Rating { scale: u8 },
    Choice { options: Vec<String> },
    Text { max_len: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuestionnaireItem {
    pub id: String,
    pub prompt: String,
    #[serde(flatten)]
    pub kind: ItemKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuestionnaireDefinition {
    pub id: String,
    pub locale: String,
    pub title: String,
    pub items: Vec<QuestionnaireItem>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDefinition {
    id: String,
    locale: String,
    title: String,
    items: Vec<serde_json::Value>,
}

fn item_label(i: usize, v: &serde_json::Value) -> String {
    match v.get("id").and_then(|x| x.as_str()) {
        Some(id) => format!("item {i} ({id:?})"),
        None => format!("item {i}"),
    }
}

fn parse_item(v: serde_json::Value) -> Result<QuestionnaireItem, String> {
    let mut obj = match v {
        serde_json::Value::Object(o) => o,
        _ => return Err("not an object".into()),
    };
    let id = match obj.remove("id") {
        Some(serde_json::Value::String(s)) if !s.is_empty() => s,
        _ => return Err("missing id".into()),
    };
    let prompt = match obj.remove("prompt") {
        Some(serde_json::Value::String(s)) => s,
        _ => return Err("missing prompt".into()),
    };
    let kind: ItemKind = serde_json::from_value(serde_json::Value::Object(obj)).map_err(|e| e.to_string())?;
    match &kind {
        ItemKind::Rating { scale } if !(2..=10).contains(scale) => return Err(format!("rating scale {scale} outside 2..=10")),
        ItemKind::Choice { options } if options.len() < 2 => return Err("choice needs at least two options".into()),
        ItemKind::Text { max_len: 0 } => return Err("text max_len must be positive".into()),
        _ => {}
    }
    Ok(QuestionnaireItem { id, prompt, kind })
}

impl QuestionnaireDefinition {
    pub fn from_json(bytes: &[u8]) -> Result<Self, SessionError> {
        let raw: RawDefinition = serde_json::from_slice(bytes).map_err(|e| SessionError::Questionnaire(e.to_string()))?;
        let mut items: Vec<QuestionnaireItem> = Vec::with_capacity(raw.items.len());
        for (i, v) in raw.items.into_iter().enumerate() {
            let label = item_label(i, &v);
            let item = parse_item(v).map_err(|e| SessionError::Questionnaire(format!("{label}: {e}")))?;
            if items.iter().any(|o| o.id == item.id) {
                return Err(SessionError::Questionnaire(format!("{label}: duplicate id")));
            }
            items.push(item);
        }
        Ok(Self { id: raw.id, locale: raw.locale, title: raw.title, items })
    }

    /// Definitions shipped with the crate.
    pub fn builtin(id: &str, locale: &str) -> Option<Self> {
        let text = match (id, locale) {
            ("motivation", "en") => include_str!("../../assets/questionnaires/motivation.en.json"),
            ("motivation", "de") => include_str!("../../assets/questionnaires/motivation.de.json"),
            ("meditation", "en") => include_str!("../../assets/questionnaires/meditation.en.json"),
            ("meditation", "de") => include_str!("../../assets/questionnaires/meditation.de.json"),
            _ => return None,
        };
        Some(Self::from_json(text.as_bytes()).expect("builtin questionnaire is valid"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Answer {
    Rating(u8),
    Choice(usize),
    Text(String),
}

/// Asks every item in order. `respond` supplies the answer and `clock` the
/// answer time in milliseconds.
pub fn run_questionnaire(
    items: &[QuestionnaireItem],
    mut respond: impl FnMut(&QuestionnaireItem) -> Answer,
    mut clock: impl FnMut() -> u64,
) -> Result<Vec<QuestionnaireResponse>, SessionError> {
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        let answer = respond(item);
        let invalid = || SessionError::InvalidAnswer { item: item.id.clone(), answer: format!("{answer:?}") };
        let (value, scale) = match (&item.kind, &answer) {
            (ItemKind::Rating { scale }, Answer::Rating(v)) if (1..=*scale).contains(v) => ((*v).into(), Some(*scale)),
            (ItemKind::Choice { options }, Answer::Choice(i)) if *i < options.len() => (options[*i].clone().into(), None),
            (ItemKind::Text { max_len }, Answer::Text(t)) if t.chars().count() <= *max_len => (t.clone().into(), None),
            _ => return Err(invalid()),
        };
        out.push(QuestionnaireResponse { item: item.id.clone(), value, scale, answered_at: clock() });
    }
    Ok(out)
}
