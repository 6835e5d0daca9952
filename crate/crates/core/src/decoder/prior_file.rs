//! Versioned binary prior file.
//!
//! All integers and floats are little-endian; floats are IEEE-754 `f64`.
//!
//! ```text
//! magic            4 bytes  "MYPR"
//! version          u16      1
//! dim              u16      D
//! grid_len         u16      G
//! lambda_grid      G × f64
//! learning_lambda  f64
//! ridge            f64
//! iterations       u32
//! residual         f64
//! mean             D × f64
//! covariance       D·D × f64, row-major
//! feature names    D × (u16 byte length, UTF-8 bytes)
//! ```
//!
//! The last name is `bias`; the rest follow the trial feature order.

use nalgebra::{DMatrix, DVector};

use super::{DecoderError, GaussianPrior};

pub const PRIOR_MAGIC: &[u8; 4] = b"MYPR";
pub const PRIOR_VERSION: u16 = 1;

/// A learned prior together with what is needed to apply it.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorFile {
    pub prior: GaussianPrior,
    pub lambda_grid: Vec<f64>,
    pub learning_lambda: f64,
    pub ridge: f64,
    pub iterations: u32,
    pub residual: f64,
    pub feature_names: Vec<String>,
}

impl PriorFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.prior.dim();
        let mut out = Vec::with_capacity(32 + 8 * (self.lambda_grid.len() + d + d * d));
        out.extend_from_slice(PRIOR_MAGIC);
        out.extend_from_slice(&PRIOR_VERSION.to_le_bytes());
        out.extend_from_slice(&(d as u16).to_le_bytes());
        out.extend_from_slice(&(self.lambda_grid.len() as u16).to_le_bytes());
        for l in &self.lambda_grid {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out.extend_from_slice(&self.learning_lambda.to_le_bytes());
        out.extend_from_slice(&self.ridge.to_le_bytes());
        out.extend_from_slice(&self.iterations.to_le_bytes());
        out.extend_from_slice(&self.residual.to_le_bytes());
        for v in self.prior.mean().iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for r in 0..d {
            for c in 0..d {
                out.extend_from_slice(&self.prior.covariance()[(r, c)].to_le_bytes());
            }
        }
        for name in &self.feature_names {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecoderError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != PRIOR_MAGIC {
            return Err(DecoderError::BadMagic);
        }
        let version = r.u16()?;
        if version != PRIOR_VERSION {
            return Err(DecoderError::UnsupportedVersion(version));
        }
        let d = r.u16()? as usize;
        if d == 0 {
            return Err(DecoderError::Malformed("zero dimension".into()));
        }
        let g = r.u16()? as usize;
        let lambda_grid = (0..g).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        let learning_lambda = r.f64()?;
        let ridge = r.f64()?;
        let iterations = r.u32()?;
        let residual = r.f64()?;
        // Size check before allocating d² floats.
        if r.remaining() < 8 * (d + d * d) {
            return Err(DecoderError::Truncated);
        }
        let mean = DVector::from_iterator(d, (0..d).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?);
        let cov_vals = (0..d * d).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        let covariance = DMatrix::from_row_slice(d, d, &cov_vals);
        let mut feature_names = Vec::with_capacity(d);
        for _ in 0..d {
            let len = r.u16()? as usize;
            let raw = r.take(len)?;
            feature_names.push(
                String::from_utf8(raw.to_vec()).map_err(|_| DecoderError::Malformed("feature name is not UTF-8".into()))?,
            );
        }
        if r.remaining() != 0 {
            return Err(DecoderError::Malformed(format!("{} trailing bytes", r.remaining())));
        }
        Ok(Self {
            prior: GaussianPrior::new(mean, covariance)?,
            lambda_grid,
            learning_lambda,
            ridge,
            iterations,
            residual,
            feature_names,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], DecoderError> {
        if self.remaining() < n {
            return Err(DecoderError::Truncated);
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, DecoderError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, DecoderError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, DecoderError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
