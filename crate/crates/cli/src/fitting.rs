//! Repeated synthetic fitting runs for one profile.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use mynd_core::streamkit::{FittingGateConfig, NoiseConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::lab::read_profile;
use crate::manifest::Manifest;
use crate::simulate::{noise_check, simulate_fitting};

#[derive(Debug, Clone)]
pub struct FittingCheckConfig {
    pub profile: Option<PathBuf>,
    pub seed: u64,
    pub runs: usize,
    pub line_freq: u32,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct FittingRun {
    pub run: usize,
    pub em_quality: f64,
    pub fitting_seconds: f64,
    pub final_quality: f64,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn cmd_fitting_check(cfg: &FittingCheckConfig) -> Result<Vec<FittingRun>> {
    if cfg.runs == 0 {
        bail!("at least one run is required");
    }
    let mut profile = read_profile(cfg.profile.as_deref(), cfg.seed)?;
    profile.line_freq = cfg.line_freq as f64;
    let noise = NoiseConfig::with_line_freq(cfg.line_freq as f64);
    let gate = FittingGateConfig::default();
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut runs = Vec::with_capacity(cfg.runs);
    for run in 0..cfg.runs {
        let em_quality = noise_check(&profile, &noise, &mut rng)?;
        let fitted = simulate_fitting(&profile, &gate, false, &mut rng)?;
        let q = fitted.estimator.snapshot();
        runs.push(FittingRun {
            run,
            em_quality,
            fitting_seconds: fitted.seconds,
            final_quality: q.iter().sum::<f64>() / q.len() as f64,
        });
    }
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let path = cfg.out.join("fitting.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for r in &runs {
        w.serialize(r)?;
    }
    w.flush()?;
    let mut manifest = Manifest::new("fitting-check", Some(cfg.seed));
    manifest.setting("runs", cfg.runs).setting("line_freq", cfg.line_freq).output(&path);
    if let Some(p) = &cfg.profile {
        manifest.input(p)?;
    }
    manifest.write(&cfg.out)?;
    Ok(runs)
}
