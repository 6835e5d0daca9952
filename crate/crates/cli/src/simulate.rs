//! Drives the study state machine with a synthetic participant: noise
//! check, headset fitting, recording blocks, questionnaires, encryption
//! and upload.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use chrono::{DateTime, SecondsFormat};
use mynd_core::datastore::{
    flush_uploads, store_recording, store_sealed, DirTransport, HttpTransport, QualityPoint, QuestionnaireResults,
    RecipientPublicKey, SubjectId, Transport, UploadQueue,
};
use mynd_core::features::Label;
use mynd_core::session::{
    run_questionnaire, Answer, Effect, Event, ItemKind, Millis, QuestionnaireDefinition, ScenarioKind, Session,
    SessionState, StudyDefinition,
};
use mynd_core::simkit::{
    gen_recording, gen_segment, replay_stream, Pacing, RecordingInfo, SegmentSpec, SyntheticSubjectProfile, TrialPlan,
    INTER_TRIAL_SECONDS,
};
use mynd_core::streamkit::{
    em_noise_quality, fitting_gate, EegFrame, FittingGateConfig, NoiseConfig, QualityEstimator, QualityReport,
    WINDOW_LEN,
};
use mynd_core::{CHANNELS, SAMPLE_RATE_HZ};
use rand::rngs::OsRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::lab::{read_profile, read_public_key};
use crate::manifest::Manifest;

/// Study start on the simulated clock: 08:00 UTC on the first day.
const STUDY_EPOCH_SECONDS: i64 = 1_772_438_400;
/// Fitting that has not converged after this long is an error.
const MAX_FITTING_SECONDS: f64 = 1800.0;
/// Seconds of signal rated by the environmental noise check.
const NOISE_CHECK_SECONDS: usize = 2;
const DAY_MS: u64 = 24 * 3_600_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DaySelection {
    One(u8),
    All,
}

impl std::str::FromStr for DaySelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            return Ok(DaySelection::All);
        }
        s.parse::<u8>().map(DaySelection::One).map_err(|_| format!("expected a day number or \"all\", got {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportKind {
    Dir,
    Http,
}

#[derive(Debug, Clone)]
pub struct SimulateConfig {
    pub study: Option<PathBuf>,
    pub days: DaySelection,
    pub seed: u64,
    /// Subject token; a fresh random one when absent.
    pub subject: Option<String>,
    pub transport: TransportKind,
    /// Drop directory or base URL. The directory defaults to `<out>/server`.
    pub server: Option<String>,
    pub out: PathBuf,
    pub line_freq: u32,
    pub profile: Option<PathBuf>,
    pub recipient: PathBuf,
    pub battery: f64,
    pub locale: String,
}

impl SimulateConfig {
    pub fn new(out: PathBuf, recipient: PathBuf) -> Self {
        Self {
            study: None,
            days: DaySelection::One(1),
            seed: 0,
            subject: None,
            transport: TransportKind::Dir,
            server: None,
            out,
            line_freq: 50,
            profile: None,
            recipient,
            battery: 0.8,
            locale: "en".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockSummary {
    pub day: u8,
    pub scenario: String,
    pub block: u32,
    pub trials: usize,
    pub checkup: bool,
    pub fitting_seconds: f64,
    pub em_quality: Option<f64>,
    pub mean_quality: f64,
    pub started_at: String,
    pub entry: String,
}

#[derive(Debug, Clone)]
pub struct SimulateSummary {
    pub subject: SubjectId,
    pub days: Vec<u8>,
    /// Scenario ids executed per day, in order.
    pub scenarios: BTreeMap<u8, Vec<String>>,
    pub blocks: Vec<BlockSummary>,
    pub questionnaires: usize,
    pub pending_uploads: usize,
}

pub fn load_study(path: Option<&Path>) -> Result<StudyDefinition> {
    match path {
        Some(p) => {
            let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            StudyDefinition::from_json(&bytes).with_context(|| format!("parsing study {}", p.display()))
        }
        None => Ok(StudyDefinition::builtin()),
    }
}

fn timestamp(clock: Millis) -> String {
    let t = DateTime::from_timestamp_millis(STUDY_EPOCH_SECONDS * 1000 + clock.0 as i64).expect("in range");
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn millis(seconds: f64) -> Millis {
    Millis((seconds * 1000.0).round() as u64)
}

struct Sim<'a> {
    session: Session,
    clock: Millis,
    profile: SyntheticSubjectProfile,
    noise_cfg: NoiseConfig,
    gate: FittingGateConfig,
    rng: ChaCha20Rng,
    subject: SubjectId,
    recipient: RecipientPublicKey,
    outbox: PathBuf,
    queue: UploadQueue,
    transport: &'a dyn Transport,
    battery: f64,
    blocks: Vec<BlockSummary>,
    questionnaires: usize,
    scenarios: BTreeMap<u8, Vec<String>>,
}

/// Result of a fitting phase; the estimator keeps running into the block.
pub struct Fitted {
    pub seconds: f64,
    pub estimator: QualityEstimator,
    /// Sample index the next frame must carry.
    pub next_index: u64,
}

fn frame(index: u64, chunk: &[Vec<f64>; CHANNELS], i: usize) -> EegFrame {
    EegFrame { sample_index: index, channels: std::array::from_fn(|c| chunk[c][i] as f32) }
}

/// Mean environmental quality over a short stretch of headset signal.
pub fn noise_check<R: Rng>(profile: &SyntheticSubjectProfile, cfg: &NoiseConfig, rng: &mut R) -> Result<f64> {
    let fs = SAMPLE_RATE_HZ as f64;
    let spec = SegmentSpec {
        samples: NOISE_CHECK_SECONDS * SAMPLE_RATE_HZ as usize,
        sample_rate: fs,
        alpha_mult: [1.0; CHANNELS],
        extra_sigma: 0.0,
    };
    let chunk = gen_segment(profile, &spec, rng);
    let report = em_noise_quality(&chunk, fs, cfg)?;
    Ok(report.per_channel.iter().sum::<f64>() / CHANNELS as f64)
}

/// Feeds half-second chunks whose extra noise follows the profile's
/// fitting model until the gate passes. A checkup starts from an already
/// settled headset.
pub fn simulate_fitting<R: Rng>(
    profile: &SyntheticSubjectProfile,
    gate: &FittingGateConfig,
    checkup: bool,
    rng: &mut R,
) -> Result<Fitted> {
    let fs = SAMPLE_RATE_HZ as f64;
    let offset = if checkup { 3.0 * profile.fitting.decay_seconds } else { 0.0 };
    let mut estimator = QualityEstimator::new(gate.variance_threshold);
    let mut index = 0u64;
    loop {
        let elapsed = index as f64 / fs;
        if elapsed > MAX_FITTING_SECONDS {
            bail!("fitting did not reach the quality target within {MAX_FITTING_SECONDS} s");
        }
        let spec = SegmentSpec {
            samples: WINDOW_LEN,
            sample_rate: fs,
            alpha_mult: [1.0; CHANNELS],
            extra_sigma: profile.fitting.extra_sigma_at(offset + elapsed),
        };
        let chunk = gen_segment(profile, &spec, rng);
        let mut last: Option<QualityReport> = None;
        for i in 0..WINDOW_LEN {
            if let Some(r) = estimator.push_frame(&frame(index, &chunk, i))? {
                last = Some(r);
            }
            index += 1;
        }
        if let Some(r) = last {
            if fitting_gate(index as f64 / fs, &r, gate).met {
                return Ok(Fitted { seconds: index as f64 / fs, estimator, next_index: index });
            }
        }
    }
}

impl Sim<'_> {
    fn event(&mut self, event: Event) -> Result<Vec<Effect>> {
        self.session
            .next_event(event, self.clock)
            .map_err(|e| anyhow!("{e} (day {}, state {:?})", self.session.day(), self.session.state()))
    }

    fn advance(&mut self, seconds: f64) {
        self.clock = self.clock + millis(seconds);
    }

    fn noise_check(&mut self) -> Result<f64> {
        let q = noise_check(&self.profile, &self.noise_cfg, &mut self.rng)?;
        self.advance(NOISE_CHECK_SECONDS as f64);
        Ok(q)
    }

    fn fit(&mut self, checkup: bool) -> Result<Fitted> {
        let fitted = simulate_fitting(&self.profile, &self.gate, checkup, &mut self.rng)?;
        self.advance(fitted.seconds);
        Ok(fitted)
    }

    fn upload(&mut self) {
        match flush_uploads(&self.queue, self.transport) {
            Ok(outcomes) => {
                let failed = outcomes.iter().filter(|o| o.result.is_err()).count();
                log::info!("uploaded {} of {} queued file(s)", outcomes.len() - failed, outcomes.len());
            }
            Err(e) => log::warn!("upload deferred: {e}"),
        }
    }

    fn questionnaire(&mut self, scenario: usize) -> Result<()> {
        let sc = &self.session.scenarios()[scenario];
        let ScenarioKind::Questionnaire { questionnaire_id, .. } = &sc.kind else {
            bail!("scenario {} is not a questionnaire", sc.id);
        };
        let qid = questionnaire_id.clone();
        let locale = self.session.locale().to_string();
        let def = QuestionnaireDefinition::builtin(&qid, &locale)
            .ok_or_else(|| anyhow!("no questionnaire {qid:?} for locale {locale:?}"))?;
        let rng = &mut self.rng;
        let clock = self.clock;
        let responses = run_questionnaire(
            &def.items,
            |item| match &item.kind {
                ItemKind::Rating { scale } => Answer::Rating(rng.gen_range(1..=*scale)),
                ItemKind::Choice { options } => Answer::Choice(rng.gen_range(0..options.len())),
                ItemKind::Text { .. } => Answer::Text(String::new()),
            },
            || clock.0,
        )?;
        self.advance(15.0 * def.items.len() as f64);
        let results = QuestionnaireResults {
            subject_id: self.subject.clone(),
            questionnaire_id: qid,
            day: self.session.day(),
            locale,
            responses,
        };
        let fx = self.event(Event::StepDone)?;
        for e in fx {
            match e {
                Effect::SubmitQuestionnaire { .. } => {
                    store_sealed(
                        &results.to_json(),
                        &self.subject,
                        &self.recipient,
                        &self.outbox,
                        &self.queue,
                        self.clock.0,
                        &mut OsRng,
                    )?;
                    self.questionnaires += 1;
                }
                Effect::StartUpload => self.upload(),
                other => log::debug!("ignored effect {other:?}"),
            }
        }
        self.event(Event::UploadDone)?;
        Ok(())
    }

    /// Records trials until the block is persisted, then returns the
    /// summary of that block.
    fn record_block(&mut self, mut fx: Vec<Effect>, fitted: Fitted, checkup: bool, em: Option<f64>) -> Result<()> {
        let started = self.clock;
        let mut plans = Vec::new();
        loop {
            let mut persisted = None;
            for e in &fx {
                match e {
                    Effect::StartTrial { spec, .. } => {
                        let label = Label::from_sign(spec.label as f64)
                            .ok_or_else(|| anyhow!("trial label {} is not ±1", spec.label))?;
                        plans.push(TrialPlan { task_id: spec.task_id.clone(), label, seconds: spec.duration_seconds });
                    }
                    Effect::PersistBlock { scenario, block } => persisted = Some((*scenario, *block)),
                    Effect::TimerStarted(at) => log::info!("day timer started at {}", timestamp(*at)),
                    _ => {}
                }
            }
            if let Some((scenario, block)) = persisted {
                return self.persist(scenario, block, &plans, fitted, checkup, em, started);
            }
            let last = plans.last().ok_or_else(|| anyhow!("no trial was started"))?;
            self.advance(last.seconds as f64 + INTER_TRIAL_SECONDS);
            fx = self.event(Event::TrialElapsed)?;
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn persist(
        &mut self,
        scenario: usize,
        block: usize,
        plans: &[TrialPlan],
        fitted: Fitted,
        checkup: bool,
        em: Option<f64>,
        started: Millis,
    ) -> Result<()> {
        let sc = self.session.scenarios()[scenario].clone();
        let strategy = sc.strategy().unwrap_or(&sc.id).to_string();
        let info = RecordingInfo {
            subject_id: self.subject.clone(),
            scenario_id: sc.id.clone(),
            strategy,
            day: self.session.day(),
            block: block as u32,
        };
        let mut ds = gen_recording(&self.profile, &info, plans, self.rng.gen())?;

        // The quality estimator keeps running from fitting into the block.
        let mut estimator = fitted.estimator;
        let mut trace = Vec::new();
        for frame in replay_stream(ds.clone(), Pacing::Accelerated)? {
            let index = frame.sample_index;
            let shifted = EegFrame { sample_index: fitted.next_index + index, ..frame };
            if let Some(r) = estimator.push_frame(&shifted)? {
                trace.push(QualityPoint { sample_index: index, per_channel: r.per_channel.to_vec() });
            }
        }
        let mean_quality = if trace.is_empty() {
            0.0
        } else {
            trace.iter().map(|p| p.per_channel.iter().sum::<f64>() / CHANNELS as f64).sum::<f64>() / trace.len() as f64
        };
        let ended = started + millis(ds.frame_count() as f64 / SAMPLE_RATE_HZ as f64);
        ds.metadata.started_at = timestamp(started);
        ds.metadata.ended_at = timestamp(ended);
        ds.metadata.locale = self.session.locale().to_string();
        ds.metadata.fitting_time_seconds = Some(fitted.seconds);
        ds.metadata.quality_trace = trace;
        if let Some(q) = em {
            ds.metadata.extra.insert("em_quality".into(), format!("{q:.4}"));
        }
        ds.metadata.extra.insert("checkup".into(), checkup.to_string());
        let (entry, _) = store_recording(&ds, &self.recipient, &self.outbox, &self.queue, ended.0, &mut OsRng)?;

        let summary = BlockSummary {
            day: ds.day,
            scenario: sc.id.clone(),
            block: block as u32,
            trials: plans.len(),
            checkup,
            fitting_seconds: fitted.seconds,
            em_quality: em,
            mean_quality,
            started_at: ds.metadata.started_at.clone(),
            entry,
        };
        self.blocks.push(summary);
        Ok(())
    }

    fn recording(&mut self) -> Result<()> {
        self.event(Event::DeviceFound)?;
        for e in self.event(Event::BatteryRead(self.battery))? {
            if let Effect::BatteryLow { level } = e {
                log::warn!("battery at {:.0}%", level * 100.0);
            }
        }
        let fx = self.event(Event::StepDone).context("session refused to start recording")?;
        if !fx.contains(&Effect::StartNoiseCheck) {
            bail!("expected a noise check, got {fx:?}");
        }
        let em = self.noise_check()?;
        self.event(Event::NoiseCheckDone)?;
        let mut checkup = false;
        let mut em = Some(em);
        loop {
            let fitted = self.fit(checkup)?;
            let fx = self.event(Event::QualityMet)?;
            self.record_block(fx, fitted, checkup, em.take())?;
            let done = self.session.active_scenario().map_or(true, |s| s.is_complete());
            if done {
                for e in self.event(Event::EndSession)? {
                    if e == Effect::StartUpload {
                        self.upload();
                    }
                }
                if self.session.state() == SessionState::Uploading {
                    self.event(Event::UploadDone)?;
                }
                return Ok(());
            }
            self.advance(5.0);
            self.event(Event::ContinueBlock)?;
            checkup = true;
        }
    }

    fn run_day(&mut self) -> Result<()> {
        let day = self.session.day();
        while !self.session.all_complete() {
            let fx = self.event(Event::StartSession)?;
            let Some(Effect::ShowScenario { scenario, .. }) = fx.first().cloned() else {
                bail!("expected a scenario, got {fx:?}");
            };
            let id = self.session.scenarios()[scenario].id.clone();
            self.scenarios.entry(day).or_default().push(id);
            let fx = self.event(Event::StepDone)?;
            if fx.iter().any(|e| matches!(e, Effect::StartQuestionnaire { .. })) {
                self.questionnaire(scenario)?;
            } else {
                self.recording()?;
            }
        }
        Ok(())
    }
}

pub fn cmd_simulate_session(cfg: &SimulateConfig) -> Result<SimulateSummary> {
    if cfg.line_freq != 50 && cfg.line_freq != 60 {
        bail!("line frequency must be 50 or 60 Hz, got {}", cfg.line_freq);
    }
    let study = load_study(cfg.study.as_deref())?;
    let mut profile = read_profile(cfg.profile.as_deref(), cfg.seed)?;
    profile.line_freq = cfg.line_freq as f64;
    let recipient = read_public_key(&cfg.recipient)?;
    let subject = match &cfg.subject {
        Some(s) => SubjectId::parse(s)?,
        None => mynd_core::datastore::generate_subject_id()?,
    };
    let (first, last) = match cfg.days {
        DaySelection::One(d) => (d, d),
        DaySelection::All => (1, study.days),
    };
    let session = Session::starting_on_day(study.clone(), cfg.seed, &cfg.locale, first)?;

    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let outbox = cfg.out.join("outbox");
    let queue = UploadQueue::open(cfg.out.join("queue.json"))?;
    let transport: Box<dyn Transport> = match cfg.transport {
        TransportKind::Dir => {
            let root = cfg.server.as_ref().map(PathBuf::from).unwrap_or_else(|| cfg.out.join("server"));
            fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
            Box::new(DirTransport::new(root))
        }
        TransportKind::Http => {
            let base = cfg.server.as_ref().ok_or_else(|| anyhow!("--server URL is required for the http transport"))?;
            Box::new(HttpTransport::new(base, Duration::from_secs(30)))
        }
    };

    // Trial content, fitting noise and answers all come from one stream so
    // a rerun with the same seed replays the same participant.
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    rng.set_stream(0x5349_4d);
    let mut sim = Sim {
        session,
        clock: Millis((first as u64 - 1) * DAY_MS),
        profile,
        noise_cfg: NoiseConfig::with_line_freq(cfg.line_freq as f64),
        gate: FittingGateConfig::default(),
        rng,
        subject: subject.clone(),
        recipient,
        outbox,
        queue,
        transport: transport.as_ref(),
        battery: cfg.battery,
        blocks: Vec::new(),
        questionnaires: 0,
        scenarios: BTreeMap::new(),
    };
    let mut days = Vec::new();
    loop {
        let day = sim.session.day();
        sim.run_day()?;
        days.push(day);
        if day >= last {
            break;
        }
        // Wait out the twelve-hour window, then start the next morning.
        let started = sim.session.timer().started_at.unwrap_or(sim.clock);
        let next_morning = Millis(day as u64 * DAY_MS);
        sim.clock = sim.clock.max(started + sim.session.timer().duration).max(next_morning);
        sim.event(Event::TimerExpired)?;
    }

    let pending = sim.queue.pending().len();
    let mut csv = csv::Writer::from_path(cfg.out.join("blocks.csv"))?;
    for b in &sim.blocks {
        csv.serialize(b)?;
    }
    csv.flush()?;

    let mut manifest = Manifest::new("simulate", Some(cfg.seed));
    manifest
        .setting("days", format!("{:?}", days))
        .setting("subject", &subject)
        .setting("line_freq", cfg.line_freq)
        .setting("battery", cfg.battery)
        .setting("locale", &cfg.locale)
        .setting("transport", format!("{:?}", cfg.transport));
    if let Some(p) = &cfg.study {
        manifest.input(p)?;
    }
    if let Some(p) = &cfg.profile {
        manifest.input(p)?;
    }
    manifest.input(&cfg.recipient)?;
    manifest.output(cfg.out.join("blocks.csv")).output(cfg.out.join("queue.json"));
    manifest.write(&cfg.out)?;

    Ok(SimulateSummary {
        subject,
        days,
        scenarios: sim.scenarios,
        blocks: sim.blocks,
        questionnaires: sim.questionnaires,
        pending_uploads: pending,
    })
}
