use serde::{Deserialize, Serialize};

use super::{FeatureError, FeatureVector, FEATURE_DIM, FEATURE_KINDS};
use crate::CHANNELS;

/// Squared feature/label correlation, indexed `[channel][feature kind]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct R2Map {
    pub values: [[f64; FEATURE_KINDS.len()]; CHANNELS],
}

impl R2Map {
    pub fn get(&self, channel: usize, kind: usize) -> f64 {
        self.values[channel][kind]
    }

    pub fn flat(&self) -> [f64; FEATURE_DIM] {
        let mut out = [0.0; FEATURE_DIM];
        for (c, row) in self.values.iter().enumerate() {
            out[c * row.len()..(c + 1) * row.len()].copy_from_slice(row);
        }
        out
    }
}

/// Coefficient of determination between each feature dimension and the ±1
/// task label. A dimension without spread scores 0.
pub fn r2_map(features: &[FeatureVector]) -> Result<R2Map, FeatureError> {
    let labels: Vec<f64> = features.iter().map(|f| f.meta.label.sign()).collect();
    if !(labels.iter().any(|&l| l > 0.0) && labels.iter().any(|&l| l < 0.0)) {
        return Err(FeatureError::SingleClass);
    }
    let n = labels.len() as f64;
    let ly = labels.iter().sum::<f64>() / n;
    let syy: f64 = labels.iter().map(|l| (l - ly).powi(2)).sum();

    let mut values = [[0.0; FEATURE_KINDS.len()]; CHANNELS];
    for d in 0..FEATURE_DIM {
        let mx = features.iter().map(|f| f.values[d]).sum::<f64>() / n;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (f, &l) in features.iter().zip(&labels) {
            let dx = f.values[d] - mx;
            sxy += dx * (l - ly);
            sxx += dx * dx;
        }
        let r2 = if sxx > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 0.0 };
        values[d / FEATURE_KINDS.len()][d % FEATURE_KINDS.len()] = r2;
    }
    Ok(R2Map { values })
}

/// Element-wise mean of per-subject maps.
pub fn average_r2_maps(maps: &[R2Map]) -> Result<R2Map, FeatureError> {
    if maps.is_empty() {
        return Err(FeatureError::Empty);
    }
    let mut values = [[0.0; FEATURE_KINDS.len()]; CHANNELS];
    for m in maps {
        for (acc, row) in values.iter_mut().zip(&m.values) {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v / maps.len() as f64;
            }
        }
    }
    Ok(R2Map { values })
}
