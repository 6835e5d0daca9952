use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::questionnaire::QuestionnaireDefinition;
use super::study::StudyDefinition;
use super::SessionError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub task_id: String,
    pub label: i8,
    pub duration_seconds: u32,
    pub eyes_closed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub trials: Vec<Trial>,
}

impl Block {
    pub fn duration_seconds(&self) -> u32 {
        self.trials.iter().map(|t| t.duration_seconds).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScenarioKind {
    Questionnaire { questionnaire_id: String, items: u32 },
    Recording { strategy: String, blocks: Vec<Block> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub title: String,
    pub description: String,
    pub kind: ScenarioKind,
    /// Recording blocks (or the whole questionnaire) already finished.
    pub completed: u32,
    pub estimated_minutes: u32,
}

impl Scenario {
    pub fn blocks(&self) -> &[Block] {
        match &self.kind {
            ScenarioKind::Recording { blocks, .. } => blocks,
            ScenarioKind::Questionnaire { .. } => &[],
        }
    }

    pub fn strategy(&self) -> Option<&str> {
        match &self.kind {
            ScenarioKind::Recording { strategy, .. } => Some(strategy),
            ScenarioKind::Questionnaire { .. } => None,
        }
    }

    pub fn is_recording(&self) -> bool {
        matches!(self.kind, ScenarioKind::Recording { .. })
    }

    pub fn total_units(&self) -> u32 {
        match &self.kind {
            ScenarioKind::Recording { blocks, .. } => blocks.len() as u32,
            ScenarioKind::Questionnaire { .. } => 1,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.completed >= self.total_units()
    }
}

/// Preparation estimate added to recording scenarios.
pub const PREPARATION_SECONDS: u32 = 90;
/// Per-item estimate for questionnaires.
pub const QUESTIONNAIRE_ITEM_SECONDS: u32 = 15;

fn estimate_with(scenario: &Scenario, prep: u32, per_item: u32) -> u32 {
    if scenario.is_complete() {
        return 0;
    }
    let seconds = match &scenario.kind {
        ScenarioKind::Recording { blocks, .. } => {
            blocks[scenario.completed as usize..].iter().map(Block::duration_seconds).sum::<u32>() + prep
        }
        ScenarioKind::Questionnaire { items, .. } => items * per_item,
    };
    seconds.div_ceil(60)
}

/// Remaining minutes for a scenario, rounded up. Questionnaires skip the
/// hardware preparation estimate.
pub fn estimate_duration(scenario: &Scenario) -> u32 {
    estimate_with(scenario, PREPARATION_SECONDS, QUESTIONNAIRE_ITEM_SECONDS)
}

/// Block-order RNG for one subject and day.
pub fn day_rng(seed: u64, day: u8) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(day as u64);
    rng
}

/// Scenarios for `day`: questionnaires first, then one recording scenario
/// per strategy scheduled that day. Trial order inside each block is
/// shuffled with a generator derived from `seed` and the day.
pub fn plan_schedule(study: &StudyDefinition, day: u8, seed: u64, locale: &str) -> Result<Vec<Scenario>, SessionError> {
    if day == 0 || day > study.days {
        return Err(SessionError::DayOutOfRange { day, days: study.days });
    }
    let text = |t: &super::study::LocalizedText| t.get(locale).or_else(|| t.values().next()).cloned().unwrap_or_default();
    let mut rng = day_rng(seed, day);
    let mut out = Vec::new();
    for q in study.questionnaires.iter().filter(|q| q.days.contains(&day)) {
        let def = QuestionnaireDefinition::builtin(&q.id, locale)
            .or_else(|| QuestionnaireDefinition::builtin(&q.id, "en"))
            .ok_or_else(|| SessionError::Questionnaire(format!("no definition for {:?}", q.id)))?;
        out.push(Scenario {
            id: format!("d{day}-{}", q.id),
            title: def.title.clone(),
            description: String::new(),
            kind: ScenarioKind::Questionnaire { questionnaire_id: q.id.clone(), items: def.items.len() as u32 },
            completed: 0,
            estimated_minutes: 0,
        });
    }
    for s in &study.strategies {
        let n = s.trials_per_day[day as usize - 1];
        if n == 0 {
            continue;
        }
        let blocks = (0..n / s.block_size())
            .map(|_| {
                let mut trials: Vec<Trial> = s
                    .tasks
                    .iter()
                    .flat_map(|t| {
                        std::iter::repeat_with(|| Trial {
                            task_id: t.id.clone(),
                            label: t.label,
                            duration_seconds: s.trial_seconds,
                            eyes_closed: t.eyes_closed,
                        })
                        .take(s.trials_per_task_per_block as usize)
                    })
                    .collect();
                trials.shuffle(&mut rng);
                Block { trials }
            })
            .collect();
        out.push(Scenario {
            id: format!("d{day}-{}", s.id),
            title: text(&s.title),
            description: text(&s.description),
            kind: ScenarioKind::Recording { strategy: s.id.clone(), blocks },
            completed: 0,
            estimated_minutes: 0,
        });
    }
    for sc in &mut out {
        sc.estimated_minutes = estimate_with(sc, study.preparation_seconds, study.questionnaire_item_seconds);
    }
    Ok(out)
}
