use serde::{Deserialize, Serialize};

use super::{DatastoreError, SubjectId};

/// One answered questionnaire item. `scale` is set for rating items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionnaireResponse {
    pub item: String,
    pub value: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<u8>,
    /// Milliseconds since the study epoch.
    pub answered_at: u64,
}

/// Questionnaire result file, stored as JSON and sealed like recordings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionnaireResults {
    pub subject_id: SubjectId,
    pub questionnaire_id: String,
    pub day: u8,
    pub locale: String,
    pub responses: Vec<QuestionnaireResponse>,
}

impl QuestionnaireResults {
    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("results serialize")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, DatastoreError> {
        serde_json::from_slice(bytes).map_err(|e| DatastoreError::Results(e.to_string()))
    }

    /// Integer value of a rating item, if answered.
    pub fn rating(&self, item: &str) -> Option<u8> {
        self.responses.iter().find(|r| r.item == item)?.value.as_u64().and_then(|v| u8::try_from(v).ok())
    }
}
