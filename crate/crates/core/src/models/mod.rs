//! Nested-dropout models: truncation, the complexity law, and two trainable
//! tunable autoencoders.

mod decoder;
mod linear_ae;
pub mod nn;
mod truncation;
mod vae;

use serde::{Deserialize, Serialize};

pub use decoder::{Decoder, IdentityDecoder, LinearDecoder};
pub use linear_ae::{ordered_linear_train, OrderedLinearAutoencoder};
pub use nn::{Dense, Mlp, MlpTrace, Momentum, Parameterized};
pub use truncation::{sample_k, truncate, TruncationLaw};
pub(crate) use truncation::truncate_unchecked;
pub use vae::{vae_decode_truncated, vae_loss, vae_train, TunableVae, VaeConfig, VaeLossParts};

use crate::error::{Error, Result};
use crate::tensor::Vector;

/// Optimiser settings shared by every trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub step_size: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            batch_size: 16,
            step_size: 1e-3,
            momentum: 0.9,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return Err(Error::Config(format!("step_size must be finite and >= 0, got {}", self.step_size)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum must lie in [0, 1), got {}", self.momentum)));
        }
        Ok(())
    }
}

/// Per-step minibatch losses.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub loss_trace: Vec<f64>,
}

impl TrainReport {
    /// Means over consecutive non-overlapping windows.
    pub fn smoothed(&self, window: usize) -> Vec<f64> {
        self.loss_trace
            .chunks(window.max(1))
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect()
    }
}

pub(crate) fn check_dataset(data: &[Vector]) -> Result<usize> {
    let first = data
        .first()
        .ok_or_else(|| Error::InvalidArgument("training data is empty".into()))?;
    let n = first.len();
    if n == 0 {
        return Err(Error::InvalidDimension("training vectors are empty".into()));
    }
    if let Some(bad) = data.iter().position(|x| x.len() != n) {
        return Err(Error::InvalidDimension(format!(
            "example {bad} has length {}, expected {n}",
            data[bad].len()
        )));
    }
    Ok(n)
}

pub(crate) fn check_finite_loss(step: usize, loss: f64) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::TrainingDiverged { step, loss })
    }
}
