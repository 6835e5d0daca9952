//! Offline analysis: decrypt, cut trials, featurize, evaluate per-day
//! decoders and relate accuracy to the mediators.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use mynd_core::datastore::{
    marked_trials, open_envelope_bytes, QuestionnaireResults, RecipientSecretKey, RecordingDataset, DATASET_MAGIC,
};
use mynd_core::decoder::{
    loo_accuracy, mediator_report, write_mediator_table, write_results_table, DecodingResult, GaussianPrior,
    LambdaSelection, MediatorReport, PriorFile, TaskDataset, DEFAULT_LAMBDA_GRID, MODEL_DIM,
};
use mynd_core::features::{extract_trial_features, extract_trials, normalize_features, write_feature_table, NormalizationGroup};
use walkdir::WalkDir;

use crate::lab::read_secret_key;
use crate::manifest::Manifest;

#[derive(Debug, Clone)]
pub struct DecodeConfig {
    /// Searched recursively for sealed (`.myne`) and plain (`.mynd`) files.
    pub recordings: PathBuf,
    /// Needed for sealed files.
    pub key: Option<PathBuf>,
    pub prior: Option<PathBuf>,
    /// Overrides the grid stored in the prior file.
    pub lambda_grid: Option<Vec<f64>>,
    pub out: PathBuf,
}

#[derive(Debug, Clone)]
pub struct DecodeSummary {
    pub rows: Vec<DecodingResult>,
    pub report: MediatorReport,
    pub recordings: usize,
    pub questionnaires: usize,
}

impl DecodeSummary {
    pub fn mean_accuracy(&self) -> f64 {
        self.report.overall_mean
    }
}

enum Loaded {
    Recording(Box<RecordingDataset>),
    Answers(QuestionnaireResults),
}

fn load(path: &Path, key: Option<&RecipientSecretKey>) -> Result<Loaded> {
    let raw = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let plain = if path.extension().is_some_and(|x| x == "myne") {
        let key = key.ok_or_else(|| anyhow!("{} is encrypted; pass --key", path.display()))?;
        open_envelope_bytes(&raw, key).with_context(|| format!("opening {}", path.display()))?
    } else {
        raw
    };
    if plain.starts_with(DATASET_MAGIC) {
        let ds = RecordingDataset::from_bytes(&plain).with_context(|| format!("parsing {}", path.display()))?;
        Ok(Loaded::Recording(Box::new(ds)))
    } else {
        let q = QuestionnaireResults::from_json(&plain).with_context(|| format!("parsing {}", path.display()))?;
        Ok(Loaded::Answers(q))
    }
}

/// Mean of the averaged channel qualities recorded inside `[start, end)`.
fn window_quality(ds: &RecordingDataset, start: usize, end: usize) -> Option<f64> {
    let pts: Vec<f64> = ds
        .metadata
        .quality_trace
        .iter()
        .filter(|p| (start as u64..end as u64).contains(&p.sample_index))
        .map(|p| p.per_channel.iter().sum::<f64>() / p.per_channel.len().max(1) as f64)
        .collect();
    (!pts.is_empty()).then(|| pts.iter().sum::<f64>() / pts.len() as f64)
}

pub fn load_prior(path: Option<&Path>) -> Result<Option<PriorFile>> {
    let Some(p) = path else { return Ok(None) };
    let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
    let file = PriorFile::from_bytes(&bytes).with_context(|| format!("parsing prior {}", p.display()))?;
    if file.prior.dim() != MODEL_DIM {
        bail!("prior has dimension {}, the decoder needs {MODEL_DIM}", file.prior.dim());
    }
    Ok(Some(file))
}

pub fn cmd_decode(cfg: &DecodeConfig) -> Result<DecodeSummary> {
    let key = cfg.key.as_deref().map(read_secret_key).transpose()?;
    let prior_file = load_prior(cfg.prior.as_deref())?;
    let prior = prior_file.as_ref().map(|f| f.prior.clone()).unwrap_or_else(|| GaussianPrior::uninformative(MODEL_DIM));
    let grid = cfg
        .lambda_grid
        .clone()
        .or_else(|| prior_file.as_ref().map(|f| f.lambda_grid.clone()))
        .unwrap_or_else(|| DEFAULT_LAMBDA_GRID.to_vec());
    if grid.is_empty() || grid.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
        bail!("lambda grid must hold positive finite values, got {grid:?}");
    }
    let selection = LambdaSelection::InnerLoo(grid.clone());

    if !cfg.recordings.is_dir() {
        bail!("no recordings: {} is not a directory", cfg.recordings.display());
    }
    let mut files: Vec<PathBuf> = WalkDir::new(&cfg.recordings)
        .sort_by_file_name()
        .into_iter()
        .filter_map(|e| e.ok())
        .map(|e| e.into_path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "myne" || x == "mynd"))
        .collect();
    files.sort();

    let mut manifest = Manifest::new("decode", None);
    manifest.setting("lambda_grid", format!("{grid:?}"));
    if let Some(p) = &cfg.prior {
        manifest.input(p)?;
    }
    let mut datasets = Vec::new();
    let mut answers = Vec::new();
    for f in &files {
        manifest.input(f)?;
        match load(f, key.as_ref())? {
            Loaded::Recording(ds) => datasets.push(*ds),
            Loaded::Answers(q) => answers.push(q),
        }
    }
    if datasets.is_empty() {
        bail!("no recordings found in {}", cfg.recordings.display());
    }

    let mut features = Vec::new();
    let mut trial_quality = Vec::new();
    for ds in &datasets {
        let trials = extract_trials(ds).with_context(|| format!("cutting trials of {}", ds.scenario_id))?;
        if trials.is_empty() {
            bail!("recording {} day {} has no trial markers", ds.scenario_id, ds.day);
        }
        for (t, m) in trials.iter().zip(marked_trials(ds)) {
            features.push(extract_trial_features(t)?);
            trial_quality.push(window_quality(ds, m.start, m.end));
        }
    }
    let normalized = normalize_features(&features, NormalizationGroup::HomeDay)?;

    let mut groups: BTreeMap<(String, u8, String), Vec<usize>> = BTreeMap::new();
    for (i, v) in normalized.iter().enumerate() {
        groups.entry((v.meta.subject.clone(), v.meta.day, v.meta.strategy.clone())).or_default().push(i);
    }
    let rating = |subject: &str, qid: &str, day: Option<u8>| {
        answers
            .iter()
            .filter(|q| q.subject_id.as_str() == subject && q.questionnaire_id == qid && day.map_or(true, |d| q.day == d))
            .find_map(|q| q.rating(qid))
    };
    let mut rows = Vec::new();
    for ((subject, day, strategy), idx) in &groups {
        let vs: Vec<_> = idx.iter().map(|&i| normalized[i].clone()).collect();
        let task = TaskDataset::from_features(&vs)?;
        let out = match loo_accuracy(&task, &prior, &selection) {
            Ok(o) => o,
            Err(e) => {
                log::warn!("skipping {subject} day {day} {strategy}: {e}");
                continue;
            }
        };
        let qs: Vec<f64> = idx.iter().filter_map(|&i| trial_quality[i]).collect();
        let mean_quality = if qs.is_empty() { f64::NAN } else { qs.iter().sum::<f64>() / qs.len() as f64 };
        rows.push(DecodingResult {
            subject: subject.clone(),
            day: *day,
            strategy: strategy.clone(),
            accuracy: out.accuracy,
            correct: out.correct,
            n_trials: out.n,
            mean_quality,
            motivation: rating(subject, "motivation", Some(*day)),
            meditation: rating(subject, "meditation", None),
        });
    }
    let report = mediator_report(&rows)?;

    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let path = |name: &str| cfg.out.join(name);
    write_results_table(fs::File::create(path("results.csv"))?, &rows)?;
    write_mediator_table(fs::File::create(path("mediators.csv"))?, &report)?;
    write_feature_table(fs::File::create(path("features.csv"))?, &normalized)?;
    write_accuracy_by_day(&path("accuracy_by_day.csv"), &rows)?;
    write_accuracy_vs_quality(&path("accuracy_vs_quality.csv"), &rows)?;
    for name in ["results.csv", "mediators.csv", "features.csv", "accuracy_by_day.csv", "accuracy_vs_quality.csv"] {
        manifest.output(path(name));
    }
    manifest.write(&cfg.out)?;
    Ok(DecodeSummary { rows, report, recordings: datasets.len(), questionnaires: answers.len() })
}

/// Plot series: mean and median accuracy per strategy and day.
fn write_accuracy_by_day(path: &Path, rows: &[DecodingResult]) -> Result<()> {
    let mut by: BTreeMap<(String, u8), Vec<f64>> = BTreeMap::new();
    for r in rows {
        by.entry((r.strategy.clone(), r.day)).or_default().push(r.accuracy);
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["strategy", "day", "n", "mean_accuracy", "median_accuracy"])?;
    for ((s, d), mut v) in by {
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        let mean = v.iter().sum::<f64>() / n as f64;
        w.write_record([s, d.to_string(), n.to_string(), mean.to_string(), median.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Plot series: one point per decoded task.
fn write_accuracy_vs_quality(path: &Path, rows: &[DecodingResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["subject", "day", "strategy", "mean_quality", "accuracy"])?;
    for r in rows {
        w.write_record([r.subject.clone(), r.day.to_string(), r.strategy.clone(), r.mean_quality.to_string(), r.accuracy.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
