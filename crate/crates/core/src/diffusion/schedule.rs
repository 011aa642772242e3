use serde::{Deserialize, Serialize};

use crate::error::{dim_check, index_check, Error, Result};
use crate::tensor::{RandomSource, Vector};

/// Linear β ramp as stored in manifests and configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            steps: 200,
            beta_start: 1e-4,
            beta_end: 0.05,
        }
    }
}

impl ScheduleSpec {
    pub fn build(&self) -> Result<NoiseSchedule> {
        make_schedule(self.steps, self.beta_start, self.beta_end)
    }
}

/// Variance schedule indexed by `t = 1..=T`, with `ᾱ₀ = 1`.
///
/// A respaced schedule keeps the original training timestep of each of its
/// steps in [`net_time`](Self::net_time), which is what the denoiser sees.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    beta: Vector,
    alpha: Vector,
    alpha_bar: Vector,
    ddpm_sigma: Vector,
    net_times: Vec<usize>,
}

pub fn make_schedule(steps: usize, beta_start: f64, beta_end: f64) -> Result<NoiseSchedule> {
    if steps == 0 {
        return Err(Error::InvalidArgument("schedule needs T >= 1".into()));
    }
    if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}"
        )));
    }
    let beta: Vec<f64> = (0..steps)
        .map(|i| {
            if steps == 1 {
                beta_start
            } else {
                beta_start + (beta_end - beta_start) * i as f64 / (steps - 1) as f64
            }
        })
        .collect();
    NoiseSchedule::from_betas(beta, (1..=steps).collect())
}

impl NoiseSchedule {
    fn from_betas(beta: Vec<f64>, net_times: Vec<usize>) -> Result<Self> {
        let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bar = Vec::with_capacity(beta.len());
        let mut acc = 1.0;
        for a in &alpha {
            acc *= a;
            alpha_bar.push(acc);
        }
        let ddpm_sigma: Vec<f64> = (0..beta.len())
            .map(|i| {
                let prev = if i == 0 { 1.0 } else { alpha_bar[i - 1] };
                ((1.0 - prev) / (1.0 - alpha_bar[i]) * beta[i]).sqrt()
            })
            .collect();
        if alpha_bar.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::InvalidArgument("schedule underflows to ᾱ = 0".into()));
        }
        Ok(Self {
            beta: beta.into(),
            alpha: alpha.into(),
            alpha_bar: alpha_bar.into(),
            ddpm_sigma: Vector::from(ddpm_sigma),
            net_times,
        })
    }

    /// Schedule with `steps` evenly spaced timesteps of `self`; its ᾱ values
    /// are a subsequence of the original ones.
    pub fn respaced(&self, steps: usize) -> Result<Self> {
        let total = self.steps();
        if steps == 0 || steps > total {
            return Err(Error::InvalidArgument(format!("cannot respace {total} steps to {steps}")));
        }
        if steps == total {
            return Ok(self.clone());
        }
        let picks: Vec<usize> = (1..=steps)
            .map(|i| ((i * total) as f64 / steps as f64).round() as usize)
            .collect();
        let mut prev = 1.0;
        let mut beta = Vec::with_capacity(steps);
        for &t in &picks {
            let ab = self.alpha_bar(t);
            beta.push(1.0 - ab / prev);
            prev = ab;
        }
        let net_times = picks.iter().map(|&t| self.net_time(t)).collect();
        Self::from_betas(beta, net_times)
    }

    pub fn steps(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.beta[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[t - 1]
    }

    /// `ᾱ_t`, with `ᾱ₀ = 1`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bar[t - 1]
        }
    }

    pub fn ddpm_sigma(&self, t: usize) -> f64 {
        self.ddpm_sigma[t - 1]
    }

    /// Training timestep fed to the denoiser at step `t`.
    pub fn net_time(&self, t: usize) -> usize {
        self.net_times[t - 1]
    }

    pub fn betas(&self) -> &Vector {
        &self.beta
    }

    pub fn alpha_bars(&self) -> &Vector {
        &self.alpha_bar
    }

    pub(crate) fn check_t(&self, t: usize) -> Result<()> {
        index_check(t, self.steps())
    }
}

/// `z_t = √ᾱ_t·z₀ + √(1−ᾱ_t)·ε` with `ε` drawn from `rng`. `t = 0` returns `z₀`.
pub fn forward_marginal(s: &NoiseSchedule, z0: &Vector, t: usize, rng: &mut RandomSource) -> Result<(Vector, Vector)> {
    let eps = rng.normal_vec(z0.len());
    let zt = forward_marginal_with(s, z0, t, &eps)?;
    Ok((zt, eps))
}

pub fn forward_marginal_with(s: &NoiseSchedule, z0: &Vector, t: usize, eps: &Vector) -> Result<Vector> {
    if t > s.steps() {
        return Err(Error::InvalidIndex { index: t, max: s.steps() });
    }
    dim_check("noise length", z0.len(), eps.len())?;
    let ab = s.alpha_bar(t);
    Ok(z0.scale(ab.sqrt()).add(&eps.scale((1.0 - ab).sqrt())))
}

/// `(z_t − √(1−ᾱ_t)·ε̂)/√ᾱ_t`
pub fn predict_z0(s: &NoiseSchedule, zt: &Vector, eps_hat: &Vector, t: usize) -> Result<Vector> {
    if t > s.steps() {
        return Err(Error::InvalidIndex { index: t, max: s.steps() });
    }
    dim_check("noise estimate length", zt.len(), eps_hat.len())?;
    Ok(predict_z0_unchecked(s, zt, eps_hat, t))
}

pub(crate) fn predict_z0_unchecked(s: &NoiseSchedule, zt: &Vector, eps_hat: &Vector, t: usize) -> Vector {
    let ab = s.alpha_bar(t);
    zt.sub(&eps_hat.scale((1.0 - ab).sqrt())).scale(1.0 / ab.sqrt())
}
