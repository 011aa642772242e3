//! JSON configuration documents, one per subcommand. Unknown keys are
//! rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::dataset::DataSpec;
use crate::diffusion::LdmConfig;
use crate::error::{Error, Result};
use crate::forward::OperatorDescriptor;
use crate::inversion::{InversionConfig, MapConfig};
use crate::models::VaeConfig;

pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryConfig {
    pub spectrum: Vec<f64>,
    pub sigma: f64,
    pub gamma: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            spectrum: vec![2.0, 1.0, 0.5],
            sigma: 0.8,
            gamma: 0.0,
            trials: 20_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoencoderKind {
    OrderedLinear,
    Vae,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainAeConfig {
    pub model: AutoencoderKind,
    pub data: DataSpec,
    /// Latent size, law, λ's and optimiser; only `latent_dim`, `p` and
    /// `train` apply to the linear model.
    pub vae: VaeConfig,
}

impl Default for TrainAeConfig {
    fn default() -> Self {
        Self {
            model: AutoencoderKind::OrderedLinear,
            data: DataSpec::default(),
            vae: VaeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainLdmConfig {
    /// Train on encoder latents of this model; raw signals when absent.
    pub autoencoder: Option<PathBuf>,
    pub data: DataSpec,
    pub ldm: LdmConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvertConfig {
    pub autoencoder: Option<PathBuf>,
    pub denoiser: PathBuf,
    /// Identity when absent.
    pub operator: Option<OperatorDescriptor>,
    pub sigma: f64,
    pub data: DataSpec,
    /// Index into the held-out signals.
    pub signal: usize,
    pub inversion: InversionConfig,
    pub seed: u64,
    pub peak: f64,
}

impl Default for InvertConfig {
    fn default() -> Self {
        Self {
            autoencoder: None,
            denoiser: PathBuf::from("denoiser"),
            operator: None,
            sigma: 0.1,
            data: DataSpec::default(),
            signal: 0,
            inversion: InversionConfig::default(),
            seed: 0,
            peak: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepTask {
    /// Closed-form truncated estimator on the data generator itself.
    LinearTheory,
    /// Latent MAP through a trained autoencoder.
    LatentMap,
    /// Diffusion posterior sampling in the autoencoder latent space.
    Posterior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub task: SweepTask,
    pub autoencoder: Option<PathBuf>,
    pub denoiser: Option<PathBuf>,
    pub operator: Option<OperatorDescriptor>,
    pub sigma: f64,
    /// Every `k` up to the latent size when empty.
    pub k_values: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub peak: f64,
    pub parallel: bool,
    pub data: DataSpec,
    /// `gamma`, `steps`, `step_size` and `tol` for latent MAP; `gamma` also
    /// for the linear-theory task.
    pub map: MapConfig,
    pub inversion: InversionConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            task: SweepTask::LinearTheory,
            autoencoder: None,
            denoiser: None,
            operator: None,
            sigma: 0.25,
            k_values: Vec::new(),
            trials: 20,
            seed: 0,
            peak: 1.0,
            parallel: true,
            data: DataSpec::default(),
            map: MapConfig::default(),
            inversion: InversionConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotConfig {
    pub input: PathBuf,
    pub metric: String,
}

impl Default for PlotConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::from("sweep.csv"),
            metric: "mse".into(),
        }
    }
}
