use serde::{Deserialize, Serialize};

use crate::diffusion::NoiseSchedule;
use crate::error::{Error, Result};

/// Smallest proposal standard deviation used by the quadratic coupling.
pub const SIGMA_FLOOR: f64 = 1e-4;

/// Per-step proposal standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaPolicy {
    /// `min(value, σ_t^DDPM)`.
    Constant { value: f64 },
    /// `eta·σ_t^DDPM`.
    DdpmFraction { eta: f64 },
    /// Explicit values for `t = 1..=T`, each within `[0, σ_t^DDPM]`.
    PerStep { values: Vec<f64> },
}

impl Default for SigmaPolicy {
    fn default() -> Self {
        SigmaPolicy::Constant { value: 0.1 }
    }
}

impl SigmaPolicy {
    /// Requested `σ_t` before any floor, clamped to the DDPM ceiling where
    /// the policy says so.
    pub fn requested(&self, s: &NoiseSchedule, t: usize) -> Result<f64> {
        let ceiling = s.ddpm_sigma(t);
        match self {
            SigmaPolicy::Constant { value } => {
                if !(*value >= 0.0 && value.is_finite()) {
                    return Err(Error::InvalidArgument(format!("sigma value must be finite and >= 0, got {value}")));
                }
                Ok(value.min(ceiling))
            }
            SigmaPolicy::DdpmFraction { eta } => {
                if !(0.0..=1.0).contains(eta) {
                    return Err(Error::InvalidArgument(format!("eta must lie in [0, 1], got {eta}")));
                }
                Ok(eta * ceiling)
            }
            SigmaPolicy::PerStep { values } => {
                if values.len() != s.steps() {
                    return Err(Error::InvalidArgument(format!(
                        "{} per-step sigma values for {} steps",
                        values.len(),
                        s.steps()
                    )));
                }
                let v = values[t - 1];
                crate::diffusion::check_sigma(s, t, v)?;
                Ok(v)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guidance {
    QuadraticProx,
    Gradient,
}

/// Inner solver for the quadratic data-consistency problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerSolver {
    /// Gradient step on the data term, then the exact prox of the coupling.
    ProximalGradient,
    /// Gradient step on the whole objective.
    GradientDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InversionConfig {
    /// Truncation index; `None` skips the truncation line entirely.
    pub k: Option<usize>,
    /// Reverse steps; `None` uses every step of the schedule.
    pub steps: Option<usize>,
    pub sigma: SigmaPolicy,
    pub inner_steps: usize,
    pub inner_step_size: f64,
    pub inner_solver: InnerSolver,
    pub guidance: Guidance,
    /// Step size of the gradient-guidance update.
    pub zeta: f64,
    /// Return `D(z₀)` after truncation instead of `D(ẑ₀)`.
    pub return_truncated: bool,
    pub record_trajectory: bool,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            k: None,
            steps: None,
            sigma: SigmaPolicy::default(),
            inner_steps: 3,
            inner_step_size: 0.1,
            inner_solver: InnerSolver::ProximalGradient,
            guidance: Guidance::QuadraticProx,
            zeta: 1.0,
            return_truncated: false,
            record_trajectory: false,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self, latent_dim: usize) -> Result<()> {
        if let Some(k) = self.k {
            crate::error::index_check(k, latent_dim)?;
        }
        if self.guidance == Guidance::QuadraticProx {
            if self.inner_steps == 0 {
                return Err(Error::Config("inner_steps must be at least 1".into()));
            }
            if !(self.inner_step_size > 0.0 && self.inner_step_size.is_finite()) {
                return Err(Error::Config(format!(
                    "inner_step_size must be positive, got {}",
                    self.inner_step_size
                )));
            }
        }
        if !(self.zeta >= 0.0 && self.zeta.is_finite()) {
            return Err(Error::Config(format!("zeta must be finite and >= 0, got {}", self.zeta)));
        }
        Ok(())
    }

    /// Effective `σ_t` for the configured guidance mode.
    ///
    /// The quadratic coupling needs `σ_t > 0`: a policy asking for zero
    /// where the DDPM ceiling is positive is an error, and every value is
    /// floored at [`SIGMA_FLOOR`] (the ceiling itself vanishes at `t = 1`).
    pub fn sigma_at(&self, s: &NoiseSchedule, t: usize) -> Result<f64> {
        let v = self.sigma.requested(s, t)?;
        match self.guidance {
            Guidance::QuadraticProx => {
                if v == 0.0 && s.ddpm_sigma(t) > 0.0 {
                    return Err(Error::DegenerateVariance { t });
                }
                Ok(v.max(SIGMA_FLOOR))
            }
            Guidance::Gradient => Ok(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    pub k: usize,
    pub gamma: f64,
    pub steps: usize,
    pub step_size: f64,
    /// Stop once the gradient norm falls below this.
    pub tol: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            k: 1,
            gamma: 0.0,
            steps: 2000,
            step_size: 0.1,
            tol: 1e-12,
        }
    }
}

impl MapConfig {
    pub fn validate(&self, latent_dim: usize) -> Result<()> {
        crate::error::index_check(self.k, latent_dim)?;
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be finite and >= 0, got {}", self.gamma)));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::Config(format!("step_size must be positive, got {}", self.step_size)));
        }
        Ok(())
    }
}
