use std::path::Path;

use crate::error::{Error, Result};
use crate::models::{Decoder, OrderedLinearAutoencoder, TunableVae};
use crate::persist;
use crate::tensor::Vector;

/// Either trained autoencoder, as read back from a model directory.
#[derive(Debug, Clone, PartialEq)]
pub enum Autoencoder {
    Linear(OrderedLinearAutoencoder),
    Vae(Box<TunableVae>),
}

impl Autoencoder {
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: serde_json::Value = persist::read_manifest(dir)?;
        match manifest.get("model").and_then(|m| m.as_str()) {
            Some("ordered_linear_autoencoder") => Ok(Self::Linear(OrderedLinearAutoencoder::load(dir)?)),
            Some("tunable_vae") => Ok(Self::Vae(Box::new(TunableVae::load(dir)?))),
            other => Err(Error::Config(format!(
                "{} does not hold an autoencoder (model = {other:?})",
                dir.display()
            ))),
        }
    }

    /// Deterministic encoding: `Wᵀx` or the encoder mean.
    pub fn encode(&self, x: &Vector) -> Result<Vector> {
        match self {
            Self::Linear(m) => {
                crate::error::dim_check("signal length", m.input_dim(), x.len())?;
                Ok(m.encode(x))
            }
            Self::Vae(m) => m.encode_mean(x),
        }
    }
}

impl Decoder for Autoencoder {
    fn latent_dim(&self) -> usize {
        match self {
            Self::Linear(m) => m.latent_dim(),
            Self::Vae(m) => m.latent_dim(),
        }
    }

    fn output_dim(&self) -> usize {
        match self {
            Self::Linear(m) => m.output_dim(),
            Self::Vae(m) => m.output_dim(),
        }
    }

    fn decode(&self, z: &Vector) -> Vector {
        match self {
            Self::Linear(m) => m.decode(z),
            Self::Vae(m) => m.decode(z),
        }
    }

    fn pullback(&self, z: &Vector, grad_out: &Vector) -> Vector {
        match self {
            Self::Linear(m) => m.pullback(z, grad_out),
            Self::Vae(m) => m.pullback(z, grad_out),
        }
    }
}

impl Autoencoder {
    /// Writes the model; the linear manifest also records `cfg.p` and the
    /// optimiser settings.
    pub fn save(&self, dir: &Path, cfg: &crate::models::VaeConfig) -> Result<()> {
        match self {
            Self::Linear(m) => m.save(dir, &cfg.law()?, &cfg.train),
            Self::Vae(m) => m.save(dir),
        }
    }
}
