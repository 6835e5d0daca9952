use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::DecoderError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    /// Two-sided p-value from the t distribution with `n − 2` degrees of
    /// freedom.
    pub p: f64,
    pub n: usize,
}

impl Correlation {
    pub fn degrees_of_freedom(&self) -> usize {
        self.n - 2
    }
}

/// Two-sided p-value for a sample correlation `r` over `n` pairs.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

/// Sample Pearson correlation with its two-sided p-value.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<Correlation, DecoderError> {
    if a.len() != b.len() {
        return Err(DecoderError::LengthMismatch { left: a.len(), right: b.len() });
    }
    let n = a.len();
    if n < 3 {
        return Err(DecoderError::TooFewTrials(n));
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    let scale = |m: f64| f64::EPSILON * m.abs().max(1.0);
    if saa.sqrt() <= scale(ma) * n as f64 || sbb.sqrt() <= scale(mb) * n as f64 {
        return Err(DecoderError::ZeroVariance);
    }
    let r = (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0);
    Ok(Correlation { r, p: correlation_p_value(r, n), n })
}
