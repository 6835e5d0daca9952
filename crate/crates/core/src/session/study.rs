//! Study definition file. The key set is documented in `docs/formats.md`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SessionError;

const BUILTIN_STUDY: &str = include_str!("../../assets/study.json");

/// Text in every supported locale, keyed by locale tag.
pub type LocalizedText = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub id: String,
    /// +1 or -1; the decoder target for trials of this task.
    pub label: i8,
    pub eyes_closed: bool,
    pub instructions: LocalizedText,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySpec {
    pub id: String,
    pub title: LocalizedText,
    pub description: LocalizedText,
    pub trial_seconds: u32,
    pub trials_per_task_per_block: u32,
    pub tasks: Vec<TaskSpec>,
    /// Trials scheduled on each study day, day 1 first.
    pub trials_per_day: Vec<u32>,
}

impl StrategySpec {
    pub fn block_size(&self) -> u32 {
        self.trials_per_task_per_block * self.tasks.len() as u32
    }

    pub fn total_trials(&self) -> u32 {
        self.trials_per_day.iter().sum()
    }

    pub fn task(&self, id: &str) -> Option<&TaskSpec> {
        self.tasks.iter().find(|t| t.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionnaireSchedule {
    pub id: String,
    pub days: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyDefinition {
    pub days: u8,
    pub day_timeout_hours: u32,
    pub preparation_seconds: u32,
    pub questionnaire_item_seconds: u32,
    pub locales: Vec<String>,
    pub questionnaires: Vec<QuestionnaireSchedule>,
    pub strategies: Vec<StrategySpec>,
}

impl StudyDefinition {
    /// The seven-day at-home study shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_STUDY.as_bytes()).expect("builtin study definition is valid")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, SessionError> {
        let def: Self = serde_json::from_slice(bytes).map_err(|e| SessionError::StudyDefinition(e.to_string()))?;
        def.validate()?;
        Ok(def)
    }

    pub fn strategy(&self, id: &str) -> Option<&StrategySpec> {
        self.strategies.iter().find(|s| s.id == id)
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |msg: String| Err(SessionError::StudyDefinition(msg));
        if self.days == 0 {
            return bad("study needs at least one day".into());
        }
        if self.day_timeout_hours == 0 {
            return bad("day_timeout_hours must be positive".into());
        }
        if self.locales.is_empty() {
            return bad("no locales".into());
        }
        let localized = |what: &str, text: &LocalizedText| -> Result<(), SessionError> {
            match self.locales.iter().find(|l| !text.contains_key(*l)) {
                Some(l) => Err(SessionError::StudyDefinition(format!("{what} lacks locale {l:?}"))),
                None => Ok(()),
            }
        };
        for q in &self.questionnaires {
            if q.id.is_empty() {
                return bad("questionnaire with empty id".into());
            }
            if let Some(d) = q.days.iter().find(|&&d| d == 0 || d > self.days) {
                return bad(format!("questionnaire {:?} scheduled on day {d}", q.id));
            }
        }
        for (i, s) in self.strategies.iter().enumerate() {
            if s.id.is_empty() || self.strategies[..i].iter().any(|o| o.id == s.id) {
                return bad(format!("strategy {i} has an empty or duplicate id"));
            }
            localized(&format!("strategy {:?} title", s.id), &s.title)?;
            localized(&format!("strategy {:?} description", s.id), &s.description)?;
            if s.trial_seconds == 0 || s.trials_per_task_per_block == 0 {
                return bad(format!("strategy {:?} has zero trial length or block size", s.id));
            }
            let mut labels: Vec<i8> = s.tasks.iter().map(|t| t.label).collect();
            labels.sort_unstable();
            if labels != [-1, 1] {
                return bad(format!("strategy {:?} needs one task labelled -1 and one labelled +1", s.id));
            }
            for t in &s.tasks {
                localized(&format!("task {:?} instructions", t.id), &t.instructions)?;
            }
            if s.trials_per_day.len() != self.days as usize {
                return bad(format!("strategy {:?} lists {} days, study has {}", s.id, s.trials_per_day.len(), self.days));
            }
            if let Some((d, n)) = s.trials_per_day.iter().enumerate().find(|(_, &n)| n % s.block_size() != 0) {
                return bad(format!("strategy {:?}: {n} trials on day {} do not fill whole blocks", s.id, d + 1));
            }
        }
        Ok(())
    }
}
