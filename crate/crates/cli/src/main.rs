use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mynd_cli::*;

#[derive(Parser)]
#[command(name = "mynd", version, about = "Simulate at-home EEG study days and decode the recordings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransportArg {
    Dir,
    Http,
}

#[derive(Subcommand)]
enum Command {
    /// Create a recipient key pair for sealing recordings.
    Keygen {
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic lab corpus, one container file per subject.
    GenLabCorpus {
        #[arg(long, default_value_t = 11)]
        subjects: usize,
        #[arg(long, default_value_t = 40)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn a Gaussian weight prior from a lab corpus.
    LearnPrior {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 10_000)]
        iterations: usize,
        /// Stored in the prior file for decoding.
        #[arg(long, value_parser = parse_lambda_grid)]
        lambda_grid: Option<Vec<f64>>,
        /// Keep the prior mean at zero.
        #[arg(long)]
        zero_mean: bool,
    },
    /// Run the noise check and headset fitting repeatedly.
    FittingCheck {
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        runs: usize,
        #[arg(long, default_value_t = 50, value_parser = parse_line_freq)]
        line_freq: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate study days with a synthetic participant.
    Simulate {
        #[arg(long)]
        study: Option<PathBuf>,
        /// Day number or "all".
        #[arg(long, default_value = "1")]
        day: DaySelection,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Subject token (22 base64url characters); random when omitted.
        #[arg(long)]
        subject: Option<String>,
        #[arg(long, value_enum, default_value = "dir")]
        transport: TransportArg,
        /// Drop directory or base URL of the receiver.
        #[arg(long)]
        server: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50, value_parser = parse_line_freq)]
        line_freq: u32,
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Recipient public key file.
        #[arg(long)]
        recipient: PathBuf,
        /// Headset battery level in [0, 1].
        #[arg(long, default_value_t = 0.8)]
        battery: f64,
        #[arg(long, default_value = "en")]
        locale: String,
    },
    /// Decode recordings and relate accuracy to the mediators.
    Decode {
        #[arg(long)]
        recordings: PathBuf,
        /// Recipient secret key file, needed for sealed recordings.
        #[arg(long)]
        key: Option<PathBuf>,
        #[arg(long)]
        prior: Option<PathBuf>,
        #[arg(long, value_parser = parse_lambda_grid)]
        lambda_grid: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Keygen { out } => {
            let (public, secret) = cmd_keygen(&out)?;
            println!("public key: {}\nsecret key: {}", public.display(), secret.display());
        }
        Command::GenLabCorpus { subjects, trials, seed, profile, out } => {
            let paths = cmd_gen_lab_corpus(&LabCorpusConfig { subjects, trials, seed, profile, out })?;
            println!("wrote {} recordings", paths.len());
        }
        Command::LearnPrior { corpus, out, lambda, iterations, lambda_grid, zero_mean } => {
            let mut cfg = LearnPriorConfig::new(corpus, out);
            cfg.lambda = lambda;
            cfg.iterations = iterations;
            cfg.zero_mean = zero_mean;
            if let Some(g) = lambda_grid {
                cfg.lambda_grid = g;
            }
            let s = cmd_learn_prior(&cfg)?;
            println!(
                "{} tasks, {} iterations, residual {:.3e} ({})",
                s.tasks,
                s.iterations,
                s.residual,
                if s.converged { "converged" } else { "iteration limit reached" }
            );
        }
        Command::FittingCheck { profile, seed, runs, line_freq, out } => {
            let runs = cmd_fitting_check(&FittingCheckConfig { profile, seed, runs, line_freq, out })?;
            for r in &runs {
                println!("run {}: EM quality {:.3}, fitted in {:.1} s", r.run, r.em_quality, r.fitting_seconds);
            }
            let secs: Vec<f64> = runs.iter().map(|r| r.fitting_seconds).collect();
            println!("median fitting time {:.1} s", fitting::median(&secs));
        }
        Command::Simulate { study, day, seed, subject, transport, server, out, line_freq, profile, recipient, battery, locale } => {
            let mut cfg = SimulateConfig::new(out, recipient);
            cfg.study = study;
            cfg.days = day;
            cfg.seed = seed;
            cfg.subject = subject;
            cfg.transport = match transport {
                TransportArg::Dir => TransportKind::Dir,
                TransportArg::Http => TransportKind::Http,
            };
            cfg.server = server;
            cfg.line_freq = line_freq;
            cfg.profile = profile;
            cfg.battery = battery;
            cfg.locale = locale;
            let s = cmd_simulate_session(&cfg)?;
            for b in &s.blocks {
                println!(
                    "day {} {} block {}: {} trials, {} {:.1} s, mean quality {:.3}",
                    b.day,
                    b.scenario,
                    b.block,
                    b.trials,
                    if b.checkup { "checkup" } else { "fitting" },
                    b.fitting_seconds,
                    b.mean_quality
                );
            }
            println!(
                "subject {}: {} block(s), {} questionnaire(s), {} upload(s) pending",
                s.subject,
                s.blocks.len(),
                s.questionnaires,
                s.pending_uploads
            );
        }
        Command::Decode { recordings, key, prior, lambda_grid, out } => {
            let s = cmd_decode(&DecodeConfig { recordings, key, prior, lambda_grid, out })?;
            for r in &s.rows {
                println!("{} day {} {}: {:.3} ({}/{})", r.subject, r.day, r.strategy, r.accuracy, r.correct, r.n_trials);
            }
            println!("mean accuracy {:.3} over {} task(s)", s.mean_accuracy(), s.rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
