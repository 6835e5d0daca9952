//! Key generation, synthetic lab corpora and prior learning.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mynd_core::datastore::{RecipientPublicKey, RecipientSecretKey, RecordingDataset};
use mynd_core::decoder::{learn_prior, PriorFile, PriorLearning, DEFAULT_LAMBDA_GRID};
use mynd_core::features::{feature_names, NormalizationGroup};
use mynd_core::simkit::{gen_lab_recordings, recordings_to_tasks, ProfileDistribution, SyntheticSubjectProfile};
use rand::rngs::OsRng;

use crate::manifest::Manifest;

pub const PUBLIC_KEY_FILE: &str = "recipient.pub";
pub const SECRET_KEY_FILE: &str = "recipient.key";

/// Writes a fresh recipient key pair as hex into `out`.
pub fn cmd_keygen(out: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let secret = RecipientSecretKey::generate(&mut OsRng);
    let public_path = out.join(PUBLIC_KEY_FILE);
    let secret_path = out.join(SECRET_KEY_FILE);
    fs::write(&public_path, format!("{}\n", secret.public_key().to_hex()))?;
    fs::write(&secret_path, format!("{}\n", secret.to_hex()))?;
    Ok((public_path, secret_path))
}

pub fn read_public_key(path: &Path) -> Result<RecipientPublicKey> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    RecipientPublicKey::from_hex(text.trim()).with_context(|| format!("parsing public key {}", path.display()))
}

pub fn read_secret_key(path: &Path) -> Result<RecipientSecretKey> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    RecipientSecretKey::from_hex(text.trim()).with_context(|| format!("parsing secret key {}", path.display()))
}

pub fn read_profile(path: Option<&Path>, seed: u64) -> Result<SyntheticSubjectProfile> {
    match path {
        Some(p) => {
            let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            SyntheticSubjectProfile::from_json(&bytes).with_context(|| format!("parsing profile {}", p.display()))
        }
        None => Ok(SyntheticSubjectProfile { seed, ..Default::default() }),
    }
}

#[derive(Debug, Clone)]
pub struct LabCorpusConfig {
    pub subjects: usize,
    pub trials: usize,
    pub seed: u64,
    pub profile: Option<PathBuf>,
    pub out: PathBuf,
}

/// Generates a lab corpus, one container file per subject.
pub fn cmd_gen_lab_corpus(cfg: &LabCorpusConfig) -> Result<Vec<PathBuf>> {
    let base = read_profile(cfg.profile.as_deref(), cfg.seed)?;
    let recs = gen_lab_recordings(cfg.subjects, cfg.trials, &ProfileDistribution::around(base), cfg.seed)?;
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let mut manifest = Manifest::new("gen-lab-corpus", Some(cfg.seed));
    manifest.setting("subjects", cfg.subjects).setting("trials", cfg.trials);
    if let Some(p) = &cfg.profile {
        manifest.input(p)?;
    }
    let mut paths = Vec::new();
    for (i, ds) in recs.iter().enumerate() {
        let path = cfg.out.join(format!("lab-{i:02}.mynd"));
        fs::write(&path, ds.to_bytes()?).with_context(|| format!("writing {}", path.display()))?;
        manifest.output(&path);
        paths.push(path);
    }
    manifest.write(&cfg.out)?;
    Ok(paths)
}

/// Container files directly inside `dir`, sorted by name.
pub fn read_corpus(dir: &Path) -> Result<Vec<(PathBuf, RecordingDataset)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "mynd"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let bytes = fs::read(&p).with_context(|| format!("reading {}", p.display()))?;
            let ds = RecordingDataset::from_bytes(&bytes).with_context(|| format!("parsing {}", p.display()))?;
            Ok((p, ds))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct LearnPriorConfig {
    pub corpus: PathBuf,
    pub out: PathBuf,
    /// Regularization used while fitting the lab tasks.
    pub lambda: f64,
    pub iterations: usize,
    /// Grid stored in the prior file for later decoding.
    pub lambda_grid: Vec<f64>,
    pub zero_mean: bool,
}

impl LearnPriorConfig {
    pub fn new(corpus: PathBuf, out: PathBuf) -> Self {
        Self {
            corpus,
            out,
            lambda: PriorLearning::default().lambda,
            iterations: PriorLearning::default().iterations,
            lambda_grid: DEFAULT_LAMBDA_GRID.to_vec(),
            zero_mean: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LearnPriorSummary {
    pub tasks: usize,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub path: PathBuf,
}

pub fn cmd_learn_prior(cfg: &LearnPriorConfig) -> Result<LearnPriorSummary> {
    let corpus = read_corpus(&cfg.corpus)?;
    let recs: Vec<RecordingDataset> = corpus.iter().map(|(_, d)| d.clone()).collect();
    let tasks = recordings_to_tasks(&recs, NormalizationGroup::LabSession)?;
    if tasks.len() < 2 {
        bail!("corpus too small: {} task(s), at least 2 subjects are needed", tasks.len());
    }
    let learning = PriorLearning {
        lambda: cfg.lambda,
        iterations: cfg.iterations,
        learn_mean: !cfg.zero_mean,
        ..Default::default()
    };
    let fit = learn_prior(&tasks, &learning)?;
    let mut names = feature_names();
    names.push("bias".into());
    let file = PriorFile {
        prior: fit.prior,
        lambda_grid: cfg.lambda_grid.clone(),
        learning_lambda: learning.lambda,
        ridge: learning.ridge,
        iterations: fit.iterations as u32,
        residual: fit.residual,
        feature_names: names,
    };
    if let Some(parent) = cfg.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(&cfg.out, file.to_bytes()).with_context(|| format!("writing {}", cfg.out.display()))?;

    let mut manifest = Manifest::new("learn-prior", None);
    manifest
        .setting("lambda", cfg.lambda)
        .setting("iterations", cfg.iterations)
        .setting("zero_mean", cfg.zero_mean)
        .setting("lambda_grid", format!("{:?}", cfg.lambda_grid));
    for (p, _) in &corpus {
        manifest.input(p)?;
    }
    manifest.output(&cfg.out);
    let dir = cfg.out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    manifest.write(dir)?;
    Ok(LearnPriorSummary {
        tasks: tasks.len(),
        iterations: fit.iterations,
        residual: fit.residual,
        converged: fit.converged,
        path: cfg.out.clone(),
    })
}
