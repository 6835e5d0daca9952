use nalgebra::{DMatrix, DVector};

use super::DecoderError;

/// Gaussian prior over regression weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrior {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    precision: DMatrix<f64>,
}

impl GaussianPrior {
    /// Builds a prior, checking that the covariance is symmetric positive
    /// definite and caching its inverse.
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self, DecoderError> {
        let d = mean.len();
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(DecoderError::DimensionMismatch { expected: d, got: covariance.nrows() });
        }
        if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(DecoderError::NonFinite);
        }
        let scale = covariance.amax().max(f64::MIN_POSITIVE);
        for i in 0..d {
            for j in 0..i {
                if (covariance[(i, j)] - covariance[(j, i)]).abs() > 1e-9 * scale {
                    return Err(DecoderError::NotSymmetric);
                }
            }
        }
        let covariance = (&covariance + covariance.transpose()) * 0.5;
        let precision = covariance
            .clone()
            .cholesky()
            .ok_or(DecoderError::NotPositiveDefinite)?
            .inverse();
        let precision = (&precision + precision.transpose()) * 0.5;
        Ok(Self { mean, covariance, precision })
    }

    /// Zero mean and identity covariance: plain ridge regression.
    pub fn uninformative(dim: usize) -> Self {
        Self {
            mean: DVector::zeros(dim),
            covariance: DMatrix::identity(dim, dim),
            precision: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Inverse covariance.
    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    /// Same covariance, zero mean.
    pub fn centered(&self) -> Self {
        Self { mean: DVector::zeros(self.dim()), ..self.clone() }
    }

    /// Smallest covariance eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        self.covariance.clone().symmetric_eigen().eigenvalues.min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_covariances() {
        let m = DVector::zeros(2);
        assert_eq!(
            GaussianPrior::new(m.clone(), DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0])).unwrap_err(),
            DecoderError::NotSymmetric
        );
        assert_eq!(
            GaussianPrior::new(m.clone(), DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).unwrap_err(),
            DecoderError::NotPositiveDefinite
        );
        assert!(matches!(
            GaussianPrior::new(m, DMatrix::identity(3, 3)),
            Err(DecoderError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn precision_inverts_covariance() {
        let cov = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 0.5]);
        let p = GaussianPrior::new(DVector::zeros(3), cov.clone()).unwrap();
        let eye = &cov * p.precision();
        assert!((eye - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
        assert!(p.min_eigenvalue() > 0.0);
    }
}
