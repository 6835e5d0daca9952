//! Study session engine: schedule planning, the session state machine,
//! the day timer and questionnaires.

mod machine;
mod questionnaire;
mod schedule;
mod study;
mod timer;

use thiserror::Error;

pub use machine::{AbortReason, DeviceStatus, Effect, Event, Session, SessionState, MIN_BATTERY};
pub use questionnaire::{run_questionnaire, Answer, ItemKind, QuestionnaireDefinition, QuestionnaireItem};
pub use schedule::{
    day_rng, estimate_duration, plan_schedule, Block, Scenario, ScenarioKind, Trial, PREPARATION_SECONDS,
    QUESTIONNAIRE_ITEM_SECONDS,
};
pub use study::{LocalizedText, QuestionnaireSchedule, StrategySpec, StudyDefinition, TaskSpec};
pub use timer::{DayTimer, Millis, TimerStatus};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SessionError {
    #[error("day {day} outside 1..={days}")]
    DayOutOfRange { day: u8, days: u8 },
    #[error("invalid study definition: {0}")]
    StudyDefinition(String),
    #[error("invalid questionnaire definition: {0}")]
    Questionnaire(String),
    #[error("answer {answer} is not valid for item {item:?}")]
    InvalidAnswer { item: String, answer: String },
    #[error("{event} is not accepted in state {state:?}")]
    InvalidTransition { state: SessionState, event: String },
    #[error("blocked: {0}")]
    Blocked(String),
    #[error("battery level {0} outside [0, 1]")]
    InvalidBattery(f64),
}
