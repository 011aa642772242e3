//! Monte-Carlo estimates of Gaussian quadratic forms.
//!
//! `E‖Mx‖²` equals `‖M‖_F²` for `x ~ N(0, I)` and `Tr(M·Σ·Mᵀ)` for
//! `x ~ N(0, Σ)`; these estimators check both identities by sampling.

use super::{symmetric_eigen, Matrix, RandomSource, Vector};
use crate::error::{dim_check, Error, Result};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    /// Number of standard errors separating the estimate from `target`.
    /// Zero-variance estimates report 0 on an exact hit and infinity otherwise.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.mean - target).abs();
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Welford accumulator.
#[derive(Debug, Clone, Default)]
pub struct RunningStats {
    count: usize,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero below two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn estimate(&self) -> McEstimate {
        McEstimate {
            mean: self.mean,
            std_error: if self.count == 0 {
                0.0
            } else {
                (self.variance() / self.count as f64).sqrt()
            },
            samples: self.count,
        }
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = RunningStats::default();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Monte-Carlo estimate of `E‖Mx‖²` over `x ~ N(0, I)`.
pub fn mc_frobenius_oracle(m: &Matrix, rng: &mut RandomSource, samples: usize) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("mc_frobenius_oracle needs samples >= 1".into()));
    }
    if m.cols() == 0 {
        return Err(Error::InvalidDimension("matrix has no columns".into()));
    }
    let mut stats = RunningStats::default();
    for _ in 0..samples {
        let x = rng.normal_vec(m.cols());
        stats.push(m.mul_vec(&x).norm_sq());
    }
    Ok(stats.estimate())
}

/// Monte-Carlo estimate of `E‖Mx‖²` over `x ~ N(0, cov)`.
///
/// Samples are drawn as `x = Q·√Λ·g` from the eigendecomposition of `cov`.
pub fn mc_covariance_oracle(
    m: &Matrix,
    cov: &Matrix,
    rng: &mut RandomSource,
    samples: usize,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("mc_covariance_oracle needs samples >= 1".into()));
    }
    dim_check("covariance size vs matrix columns", m.cols(), cov.rows())?;
    let root = psd_square_root_factor(cov)?;
    let mut stats = RunningStats::default();
    for _ in 0..samples {
        let g = rng.normal_vec(root.cols());
        let x = root.mul_vec(&g);
        stats.push(m.mul_vec(&x).norm_sq());
    }
    Ok(stats.estimate())
}

/// Returns `L` with `L·Lᵀ = cov`, rejecting matrices that are not symmetric PSD.
pub fn psd_square_root_factor(cov: &Matrix) -> Result<Matrix> {
    let eig = symmetric_eigen(cov)?;
    let top = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-10 * top.max(f64::MIN_POSITIVE) * cov.rows() as f64;
    if let Some(&neg) = eig.values.iter().find(|&&v| v < -tol) {
        return Err(Error::InvalidValue(format!(
            "covariance is not positive semi-definite (eigenvalue {neg:e})"
        )));
    }
    let scales: Vector = eig.values.map(|v| v.max(0.0).sqrt());
    let n = cov.rows();
    Ok(Matrix::from_fn(n, n, |i, j| eig.vectors[(i, j)] * scales[j]))
}
