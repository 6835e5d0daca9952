//! Commands of the `mynd` tool. Each takes a plain config struct so tests
//! can run them in-process.

pub mod decode;
pub mod fitting;
pub mod lab;
pub mod manifest;
pub mod simulate;

pub use decode::{cmd_decode, DecodeConfig, DecodeSummary};
pub use fitting::{cmd_fitting_check, FittingCheckConfig, FittingRun};
pub use lab::{cmd_gen_lab_corpus, cmd_keygen, cmd_learn_prior, LabCorpusConfig, LearnPriorConfig, LearnPriorSummary};
pub use manifest::Manifest;
pub use simulate::{cmd_simulate_session, DaySelection, SimulateConfig, SimulateSummary, TransportKind};

/// Parses a comma-separated list of regularization strengths.
pub fn parse_lambda_grid(s: &str) -> Result<Vec<f64>, String> {
    let grid = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad lambda {t:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    if grid.is_empty() || grid.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
        return Err("lambdas must be positive and finite".into());
    }
    Ok(grid)
}

/// Mains frequency, 50 or 60 Hz.
pub fn parse_line_freq(s: &str) -> Result<u32, String> {
    match s.trim() {
        "50" => Ok(50),
        "60" => Ok(60),
        other => Err(format!("line frequency must be 50 or 60, got {other:?}")),
    }
}
