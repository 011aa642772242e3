use serde::{Deserialize, Serialize};

use crate::error::{index_check, Error, Result};
use crate::tensor::{RandomSource, Vector};

/// `z ↦ (z₁, …, z_k, 0, …, 0)`.
pub fn truncate(z: &Vector, k: usize) -> Result<Vector> {
    index_check(k, z.len())?;
    Ok(truncate_unchecked(z, k))
}

pub(crate) fn truncate_unchecked(z: &Vector, k: usize) -> Vector {
    let mut out = z.clone();
    for v in &mut out.as_mut_slice()[k..] {
        *v = 0.0;
    }
    out
}

/// Truncated geometric law on `{1, …, d}`: `P(k) ∝ p(1 − p)^{k−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationLaw {
    pub d: usize,
    pub p: f64,
}

impl TruncationLaw {
    pub fn new(d: usize, p: f64) -> Result<Self> {
        let law = Self { d, p };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidArgument("truncation law needs d >= 1".into()));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "success parameter must lie in (0, 1], got {}",
                self.p
            )));
        }
        Ok(())
    }

    /// `1 − (1 − p)^d`
    fn normaliser(&self) -> f64 {
        -(self.d as f64 * (-self.p).ln_1p()).exp_m1()
    }

    pub fn pmf(&self, k: usize) -> f64 {
        if k == 0 || k > self.d {
            return 0.0;
        }
        if self.p >= 1.0 {
            return if k == 1 { 1.0 } else { 0.0 };
        }
        self.p * ((k - 1) as f64 * (-self.p).ln_1p()).exp() / self.normaliser()
    }

    /// `P(K ≥ k)`
    pub fn tail(&self, k: usize) -> f64 {
        if k <= 1 {
            return 1.0;
        }
        if k > self.d {
            return 0.0;
        }
        if self.p >= 1.0 {
            return 0.0;
        }
        let q_ln = (-self.p).ln_1p();
        // (q^{k−1} − q^d) / (1 − q^d)
        let a = ((k - 1) as f64 * q_ln).exp();
        let b = (self.d as f64 * q_ln).exp();
        (a - b) / self.normaliser()
    }

    pub fn mean(&self) -> f64 {
        (1..=self.d).map(|k| k as f64 * self.pmf(k)).sum()
    }

    /// Inverse-CDF draw: `k = ⌈ln(1 − u·(1 − q^d)) / ln q⌉`.
    pub fn sample(&self, rng: &mut RandomSource) -> usize {
        let u = rng.uniform();
        if self.p >= 1.0 || self.d == 1 {
            return 1;
        }
        let k = ((-u * self.normaliser()).ln_1p() / (-self.p).ln_1p()).ceil();
        (k as usize).clamp(1, self.d)
    }
}

/// Draws a truncation index from `law`.
pub fn sample_k(law: &TruncationLaw, rng: &mut RandomSource) -> usize {
    law.sample(rng)
}
