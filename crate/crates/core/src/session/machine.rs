//! The study state machine.
//!
//! Inputs arrive one at a time through [`Session::next_event`]. The machine
//! never sleeps or touches hardware; it returns [`Effect`]s for the host to
//! carry out (start a trial, persist a block, disconnect the headset, ...).

use serde::{Deserialize, Serialize};

use super::schedule::{plan_schedule, Scenario, ScenarioKind, Trial};
use super::study::StudyDefinition;
use super::timer::{DayTimer, Millis, TimerStatus};
use super::SessionError;

/// Minimum battery level, exclusive.
pub const MIN_BATTERY: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SessionState {
    Home,
    ScenarioInfo,
    Questionnaire,
    Preparation,
    NoiseCheck,
    Fitting,
    RecordingTrial,
    BlockReview,
    CheckupFitting,
    Uploading,
    LockedOut,
    Aborted,
}

impl SessionState {
    pub const ALL: [SessionState; 12] = [
        Self::Home,
        Self::ScenarioInfo,
        Self::Questionnaire,
        Self::Preparation,
        Self::NoiseCheck,
        Self::Fitting,
        Self::RecordingTrial,
        Self::BlockReview,
        Self::CheckupFitting,
        Self::Uploading,
        Self::LockedOut,
        Self::Aborted,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Event {
    StartSession,
    StepDone,
    DeviceFound,
    BatteryRead(f64),
    NoiseCheckDone,
    QualityMet,
    TrialElapsed,
    ContinueBlock,
    EndSession,
    AppBackgrounded,
    DeviceDisconnected,
    TimerExpired,
    UploadDone,
}

impl Event {
    /// One representative of every input kind, with a healthy battery.
    pub fn all() -> [Event; 13] {
        [
            Event::StartSession,
            Event::StepDone,
            Event::DeviceFound,
            Event::BatteryRead(0.8),
            Event::NoiseCheckDone,
            Event::QualityMet,
            Event::TrialElapsed,
            Event::ContinueBlock,
            Event::EndSession,
            Event::AppBackgrounded,
            Event::DeviceDisconnected,
            Event::TimerExpired,
            Event::UploadDone,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AbortReason {
    Backgrounded,
    Disconnected,
    BatteryLow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Effect {
    ShowScenario { scenario: usize, estimated_minutes: u32 },
    StartQuestionnaire { scenario: usize },
    SubmitQuestionnaire { scenario: usize },
    /// Battery too low to start; the step stays greyed out.
    BatteryLow { level: f64 },
    StartNoiseCheck,
    StartFitting { checkup: bool },
    StartTrial { scenario: usize, block: usize, trial: usize, spec: Trial },
    PersistBlock { scenario: usize, block: usize },
    DiscardBlock { scenario: usize, block: usize },
    Aborted(AbortReason),
    DisconnectHeadset,
    TimerStarted(Millis),
    StartUpload,
    DayLoaded { day: u8 },
    StudyComplete,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DeviceStatus {
    pub connected: bool,
    pub battery: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Session {
    study: StudyDefinition,
    seed: u64,
    locale: String,
    day: u8,
    finished: bool,
    scenarios: Vec<Scenario>,
    state: SessionState,
    active: Option<usize>,
    block: usize,
    trial: usize,
    blocks_this_session: u32,
    device: DeviceStatus,
    timer: DayTimer,
    fitting_started_at: Option<Millis>,
}

impl Session {
    /// A participant at the start of day 1. `seed` drives the block orders.
    pub fn new(study: StudyDefinition, seed: u64, locale: &str) -> Result<Self, SessionError> {
        Self::starting_on_day(study, seed, locale, 1)
    }

    /// A participant at home on the morning of `day`, as if earlier days
    /// had been completed.
    pub fn starting_on_day(study: StudyDefinition, seed: u64, locale: &str, day: u8) -> Result<Self, SessionError> {
        study.validate()?;
        let scenarios = plan_schedule(&study, day, seed, locale)?;
        let timer = DayTimer::new(Millis::from_hours(study.day_timeout_hours as u64));
        Ok(Self {
            study,
            seed,
            locale: locale.to_string(),
            day,
            finished: false,
            scenarios,
            state: SessionState::Home,
            active: None,
            block: 0,
            trial: 0,
            blocks_this_session: 0,
            device: DeviceStatus::default(),
            timer,
            fitting_started_at: None,
        })
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn day(&self) -> u8 {
        self.day
    }

    pub fn finished(&self) -> bool {
        self.finished
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn study(&self) -> &StudyDefinition {
        &self.study
    }

    pub fn locale(&self) -> &str {
        &self.locale
    }

    pub fn active_scenario(&self) -> Option<&Scenario> {
        self.active.map(|i| &self.scenarios[i])
    }

    /// (scenario, block, trial) indices of the current position.
    pub fn cursor(&self) -> (Option<usize>, usize, usize) {
        (self.active, self.block, self.trial)
    }

    pub fn device(&self) -> DeviceStatus {
        self.device
    }

    pub fn timer(&self) -> &DayTimer {
        &self.timer
    }

    pub fn fitting_started_at(&self) -> Option<Millis> {
        self.fitting_started_at
    }

    /// First scenario of the day not yet completed.
    pub fn current_scenario(&self) -> Option<usize> {
        if self.finished {
            return None;
        }
        self.scenarios.iter().position(|s| !s.is_complete())
    }

    pub fn all_complete(&self) -> bool {
        self.scenarios.iter().all(Scenario::is_complete)
    }

    pub fn timer_status(&self, now: Millis) -> TimerStatus {
        self.timer.tick(now, self.all_complete())
    }

    fn invalid(&self, event: Event) -> SessionError {
        SessionError::InvalidTransition { state: self.state, event: format!("{event:?}") }
    }

    fn current_trial(&self) -> Trial {
        let sc = self.active.expect("recording has an active scenario");
        self.scenarios[sc].blocks()[self.block].trials[self.trial].clone()
    }

    fn start_trial(&self) -> Effect {
        Effect::StartTrial {
            scenario: self.active.expect("active scenario"),
            block: self.block,
            trial: self.trial,
            spec: self.current_trial(),
        }
    }

    fn abort(&mut self, reason: AbortReason, recording: bool) -> Vec<Effect> {
        let mut fx = Vec::new();
        if recording {
            fx.push(Effect::DiscardBlock { scenario: self.active.expect("active scenario"), block: self.block });
        }
        fx.push(Effect::Aborted(reason));
        fx.push(Effect::DisconnectHeadset);
        self.device = DeviceStatus::default();
        self.state = SessionState::Aborted;
        fx
    }

    fn leave_session(&mut self) -> Vec<Effect> {
        self.device = DeviceStatus::default();
        if self.blocks_this_session > 0 {
            self.state = SessionState::Uploading;
            vec![Effect::DisconnectHeadset, Effect::StartUpload]
        } else {
            self.state = SessionState::Home;
            self.active = None;
            vec![Effect::DisconnectHeadset]
        }
    }

    fn advance_day(&mut self) -> Result<Vec<Effect>, SessionError> {
        self.active = None;
        self.timer = DayTimer::new(self.timer.duration);
        self.state = SessionState::Home;
        if self.day >= self.study.days {
            self.finished = true;
            self.scenarios.clear();
            return Ok(vec![Effect::StudyComplete]);
        }
        let scenarios = plan_schedule(&self.study, self.day + 1, self.seed, &self.locale)?;
        self.day += 1;
        self.scenarios = scenarios;
        Ok(vec![Effect::DayLoaded { day: self.day }])
    }

    fn read_battery(&mut self, level: f64) -> Result<bool, SessionError> {
        if !(0.0..=1.0).contains(&level) {
            return Err(SessionError::InvalidBattery(level));
        }
        self.device.battery = Some(level);
        Ok(level > MIN_BATTERY)
    }

    /// Applies one input. On error the session is unchanged.
    pub fn next_event(&mut self, event: Event, now: Millis) -> Result<Vec<Effect>, SessionError> {
        use Event as E;
        use SessionState as S;
        if let E::BatteryRead(l) = event {
            if !(0.0..=1.0).contains(&l) {
                return Err(SessionError::InvalidBattery(l));
            }
        }
        let fx = match (self.state, event) {
            (S::Home, E::StartSession) => {
                let idx = self.current_scenario().ok_or_else(|| self.invalid(event))?;
                self.active = Some(idx);
                self.blocks_this_session = 0;
                self.state = S::ScenarioInfo;
                let sc = &mut self.scenarios[idx];
                sc.estimated_minutes = super::estimate_duration(sc);
                vec![Effect::ShowScenario { scenario: idx, estimated_minutes: sc.estimated_minutes }]
            }
            (S::Home | S::LockedOut, E::TimerExpired) => {
                if !self.timer.expired(now) {
                    return Err(self.invalid(event));
                }
                self.advance_day()?
            }
            (S::ScenarioInfo, E::StepDone) => {
                let idx = self.active.expect("active scenario");
                if self.scenarios[idx].is_recording() {
                    self.device = DeviceStatus::default();
                    self.state = S::Preparation;
                    vec![]
                } else {
                    self.state = S::Questionnaire;
                    vec![Effect::StartQuestionnaire { scenario: idx }]
                }
            }
            (S::ScenarioInfo, E::EndSession) => {
                self.active = None;
                self.state = S::Home;
                vec![]
            }
            (S::Questionnaire, E::StepDone) => {
                let idx = self.active.expect("active scenario");
                self.scenarios[idx].completed = 1;
                self.state = S::Uploading;
                vec![Effect::SubmitQuestionnaire { scenario: idx }, Effect::StartUpload]
            }
            (S::Preparation, E::DeviceFound) => {
                self.device.connected = true;
                vec![]
            }
            (S::Preparation, E::DeviceDisconnected) => {
                self.device.connected = false;
                vec![]
            }
            (S::Preparation, E::BatteryRead(l)) => {
                if self.read_battery(l)? {
                    vec![]
                } else {
                    vec![Effect::BatteryLow { level: l }]
                }
            }
            (S::Preparation, E::StepDone) => {
                if !self.device.connected {
                    return Err(SessionError::Blocked("headset not found".into()));
                }
                match self.device.battery {
                    Some(l) if l > MIN_BATTERY => {}
                    _ => return Err(SessionError::Blocked("battery must be above 10%".into())),
                }
                self.state = S::NoiseCheck;
                vec![Effect::StartNoiseCheck]
            }
            (S::Preparation, E::EndSession) => self.leave_session(),
            (S::NoiseCheck, E::NoiseCheckDone) => {
                self.state = S::Fitting;
                self.fitting_started_at = Some(now);
                vec![Effect::StartFitting { checkup: false }]
            }
            (S::Fitting | S::CheckupFitting, E::QualityMet) => {
                let mut fx = Vec::new();
                if self.timer.start(now) {
                    fx.push(Effect::TimerStarted(now));
                }
                self.trial = 0;
                self.state = S::RecordingTrial;
                fx.push(self.start_trial());
                fx
            }
            (S::Fitting | S::CheckupFitting, E::EndSession) => self.leave_session(),
            (S::NoiseCheck | S::Fitting | S::CheckupFitting, E::BatteryRead(l)) => {
                if self.read_battery(l)? {
                    vec![]
                } else {
                    self.abort(AbortReason::BatteryLow, false)
                }
            }
            (S::NoiseCheck | S::Fitting | S::CheckupFitting, E::AppBackgrounded) => self.abort(AbortReason::Backgrounded, false),
            (S::NoiseCheck | S::Fitting | S::CheckupFitting, E::DeviceDisconnected) => {
                self.abort(AbortReason::Disconnected, false)
            }
            (S::Preparation, E::AppBackgrounded) => self.abort(AbortReason::Backgrounded, false),
            (S::RecordingTrial, E::TrialElapsed) => {
                let idx = self.active.expect("active scenario");
                if self.trial + 1 < self.scenarios[idx].blocks()[self.block].trials.len() {
                    self.trial += 1;
                    vec![self.start_trial()]
                } else {
                    let block = self.block;
                    self.scenarios[idx].completed += 1;
                    self.blocks_this_session += 1;
                    self.state = S::BlockReview;
                    vec![Effect::PersistBlock { scenario: idx, block }]
                }
            }
            (S::RecordingTrial, E::BatteryRead(l)) => {
                if self.read_battery(l)? {
                    vec![]
                } else {
                    self.abort(AbortReason::BatteryLow, true)
                }
            }
            (S::RecordingTrial, E::AppBackgrounded) => self.abort(AbortReason::Backgrounded, true),
            (S::RecordingTrial, E::DeviceDisconnected) => self.abort(AbortReason::Disconnected, true),
            (S::BlockReview, E::ContinueBlock) => {
                let idx = self.active.expect("active scenario");
                if self.scenarios[idx].is_complete() {
                    return Err(self.invalid(event));
                }
                self.block = self.scenarios[idx].completed as usize;
                self.trial = 0;
                self.fitting_started_at = Some(now);
                self.state = S::CheckupFitting;
                vec![Effect::StartFitting { checkup: true }]
            }
            (S::BlockReview, E::EndSession) => self.leave_session(),
            (S::BlockReview, E::DeviceDisconnected) => {
                self.device.connected = false;
                vec![]
            }
            (S::Uploading, E::UploadDone) => {
                self.active = None;
                self.state = if self.timer.tick(now, self.all_complete()) == TimerStatus::Locked {
                    S::LockedOut
                } else {
                    S::Home
                };
                vec![]
            }
            (S::Aborted, E::StepDone) => {
                if self.blocks_this_session > 0 {
                    self.state = S::Uploading;
                    vec![Effect::StartUpload]
                } else {
                    self.active = None;
                    self.state = S::Home;
                    vec![]
                }
            }
            _ => return Err(self.invalid(event)),
        };
        // Block index follows completion so a resumed scenario starts at
        // its first unfinished block.
        if self.state == S::ScenarioInfo {
            if let Some(idx) = self.active {
                self.block = self.scenarios[idx].completed as usize;
                self.trial = 0;
            }
        }
        Ok(fx)
    }

    /// Scenario kind accessor for hosts.
    pub fn scenario_kind(&self, idx: usize) -> Option<&ScenarioKind> {
        self.scenarios.get(idx).map(|s| &s.kind)
    }
}
