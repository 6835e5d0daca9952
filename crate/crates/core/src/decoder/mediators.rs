use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{pearson, Correlation, DecoderError};

/// Decoding outcome of one subject, day and strategy, with the mediator
/// variables recorded alongside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingResult {
    pub subject: String,
    pub day: u8,
    pub strategy: String,
    pub accuracy: f64,
    pub correct: usize,
    pub n_trials: usize,
    /// Mean averaged signal quality during trials.
    pub mean_quality: f64,
    /// Daily motivation, 1–5.
    pub motivation: Option<u8>,
    /// Meditation experience, 1–3.
    pub meditation: Option<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mediator {
    SignalQuality,
    Day,
    Motivation,
    Meditation,
}

impl Mediator {
    pub const ALL: [Mediator; 4] = [Mediator::SignalQuality, Mediator::Day, Mediator::Motivation, Mediator::Meditation];

    pub fn name(self) -> &'static str {
        match self {
            Mediator::SignalQuality => "signal_quality",
            Mediator::Day => "day",
            Mediator::Motivation => "motivation",
            Mediator::Meditation => "meditation",
        }
    }

    fn value(self, row: &DecodingResult) -> Option<f64> {
        match self {
            Mediator::SignalQuality => Some(row.mean_quality),
            Mediator::Day => Some(row.day as f64),
            Mediator::Motivation => row.motivation.map(f64::from),
            Mediator::Meditation => row.meditation.map(f64::from),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MediatorCorrelation {
    pub mediator: Mediator,
    /// Rows that carried a value for this mediator.
    pub n: usize,
    pub result: Result<Correlation, DecoderError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MediatorReport {
    pub correlations: Vec<MediatorCorrelation>,
    pub strategy_means: BTreeMap<String, f64>,
    /// Median accuracy per (strategy, day).
    pub day_medians: BTreeMap<(String, u8), f64>,
    /// Mean accuracy over all rows.
    pub overall_mean: f64,
}

impl MediatorReport {
    pub fn correlation(&self, mediator: Mediator) -> &Result<Correlation, DecoderError> {
        &self.correlations.iter().find(|c| c.mediator == mediator).expect("every mediator is reported").result
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Relates accuracies to signal quality, study day, motivation and
/// meditation experience.
pub fn mediator_report(rows: &[DecodingResult]) -> Result<MediatorReport, DecoderError> {
    if rows.is_empty() {
        return Err(DecoderError::Empty);
    }
    let correlations = Mediator::ALL
        .iter()
        .map(|&m| {
            let (acc, med): (Vec<f64>, Vec<f64>) =
                rows.iter().filter_map(|r| m.value(r).map(|v| (r.accuracy, v))).unzip();
            MediatorCorrelation { mediator: m, n: acc.len(), result: pearson(&acc, &med) }
        })
        .collect();

    let mut by_strategy: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut by_day: BTreeMap<(String, u8), Vec<f64>> = BTreeMap::new();
    for r in rows {
        by_strategy.entry(r.strategy.clone()).or_default().push(r.accuracy);
        by_day.entry((r.strategy.clone(), r.day)).or_default().push(r.accuracy);
    }
    let strategy_means = by_strategy.into_iter().map(|(k, v)| (k, v.iter().sum::<f64>() / v.len() as f64)).collect();
    let day_medians = by_day.into_iter().map(|(k, mut v)| (k, median(&mut v))).collect();
    let overall_mean = rows.iter().map(|r| r.accuracy).sum::<f64>() / rows.len() as f64;
    Ok(MediatorReport { correlations, strategy_means, day_medians, overall_mean })
}

fn csv_err(e: impl std::fmt::Display) -> DecoderError {
    DecoderError::Export(e.to_string())
}

/// One row per subject, day and strategy.
pub fn write_results_table<W: Write>(writer: W, rows: &[DecodingResult]) -> Result<(), DecoderError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "subject", "day", "strategy", "accuracy", "correct", "n_trials", "mean_quality", "motivation", "meditation",
    ])
    .map_err(csv_err)?;
    for r in rows {
        let opt = |v: Option<u8>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([
            r.subject.clone(),
            r.day.to_string(),
            r.strategy.clone(),
            r.accuracy.to_string(),
            r.correct.to_string(),
            r.n_trials.to_string(),
            r.mean_quality.to_string(),
            opt(r.motivation),
            opt(r.meditation),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

/// Correlations, then per-strategy means, then per-day medians.
pub fn write_mediator_table<W: Write>(writer: W, report: &MediatorReport) -> Result<(), DecoderError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["kind", "name", "day", "n", "value", "p", "note"]).map_err(csv_err)?;
    for c in &report.correlations {
        let rec = match &c.result {
            Ok(corr) => vec![
                "pearson".into(),
                c.mediator.name().into(),
                String::new(),
                c.n.to_string(),
                corr.r.to_string(),
                corr.p.to_string(),
                String::new(),
            ],
            Err(e) => vec![
                "pearson".into(),
                c.mediator.name().into(),
                String::new(),
                c.n.to_string(),
                String::new(),
                String::new(),
                e.to_string(),
            ],
        };
        w.write_record(&rec).map_err(csv_err)?;
    }
    for (s, m) in &report.strategy_means {
        w.write_record(["strategy_mean", s, "", "", &m.to_string(), "", ""]).map_err(csv_err)?;
    }
    for ((s, d), m) in &report.day_medians {
        w.write_record(["day_median", s, &d.to_string(), "", &m.to_string(), "", ""]).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn row(day: u8, accuracy: f64, motivation: u8, quality: f64) -> DecodingResult {
        DecodingResult {
            subject: "s".into(),
            day,
            strategy: if day % 2 == 0 { "pm".into() } else { "mi".into() },
            accuracy,
            correct: 0,
            n_trials: 18,
            mean_quality: quality,
            motivation: Some(motivation),
            meditation: Some(1 + day % 3),
        }
    }

    #[test]
    fn exact_linear_mediator_scores_one() {
        let rows: Vec<_> = (0..10).map(|i| row(1 + (i % 7) as u8, 0.4 + 0.1 * (i % 5) as f64, 1 + (i % 5) as u8, 0.9)).collect();
        let report = mediator_report(&rows).unwrap();
        let c = report.correlation(Mediator::Motivation).as_ref().unwrap();
        assert!((c.r - 1.0).abs() < 1e-12);
        assert_eq!(report.correlation(Mediator::SignalQuality).as_ref().unwrap_err(), &DecoderError::ZeroVariance);
    }

    #[test]
    fn constant_accuracy_still_reports_means() {
        let rows: Vec<_> = (0..6).map(|i| row(1 + i as u8, 0.5, 1 + (i % 5) as u8, 0.8 + 0.01 * i as f64)).collect();
        let report = mediator_report(&rows).unwrap();
        assert!(report.correlations.iter().all(|c| c.result == Err(DecoderError::ZeroVariance)));
        assert_eq!(report.strategy_means["pm"], 0.5);
        assert_eq!(report.day_medians[&("mi".to_string(), 1)], 0.5);
        assert_eq!(report.overall_mean, 0.5);
    }

    #[test]
    fn planted_correlation_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let rows: Vec<_> = (0..200)
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut rng);
                let e: f64 = StandardNormal.sample(&mut rng);
                let mut r = row(1 + (i % 7) as u8, 0.5 * z + 0.75f64.sqrt() * e, 3, z);
                r.accuracy = 0.6 + 0.1 * r.accuracy;
                r
            })
            .collect();
        let report = mediator_report(&rows).unwrap();
        let r = report.correlation(Mediator::SignalQuality).as_ref().unwrap().r;
        assert!((r - 0.5).abs() < 0.1, "{r}");
    }

    #[test]
    fn medians_and_tables() {
        let rows = vec![row(2, 0.5, 3, 0.9), row(2, 0.7, 4, 0.8), row(2, 0.9, 5, 0.7)];
        let report = mediator_report(&rows).unwrap();
        assert_eq!(report.day_medians[&("pm".to_string(), 2)], 0.7);
        let mut buf = Vec::new();
        write_mediator_table(&mut buf, &report).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("pearson,motivation,,3,"));
        assert!(text.contains("day_median,pm,2,,0.7"));
        let mut buf = Vec::new();
        write_results_table(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
        assert_eq!(mediator_report(&[]).unwrap_err(), DecoderError::Empty);
    }
}
