use std::f64::consts::PI;

use crate::models::{Mlp, MlpTrace, Parameterized};
use crate::tensor::{RandomSource, Vector};

/// Number of sinusoid frequencies in the time embedding.
pub const TIME_FREQUENCIES: usize = 8;
pub const TIME_EMBED_DIM: usize = 2 * TIME_FREQUENCIES;

/// Noise-prediction network `ε_θ(z_t, t)`; `t` is a training timestep.
pub trait NoisePredictor: Sync {
    fn latent_dim(&self) -> usize;
    fn predict(&self, zt: &Vector, t: usize) -> Vector;
    /// `(∂ε_θ/∂z_t)ᵀ · grad_out`
    fn pullback(&self, zt: &Vector, t: usize, grad_out: &Vector) -> Vector;
}

/// `[sin(ω_f τ), cos(ω_f τ)]_f` with `τ = t/T` and `ω_f = 2^f·π/2`.
pub fn time_embedding(t: usize, train_steps: usize) -> Vector {
    let tau = t as f64 / train_steps as f64;
    let mut out = Vec::with_capacity(TIME_EMBED_DIM);
    for f in 0..TIME_FREQUENCIES {
        let w = (1u64 << f) as f64 * PI / 2.0;
        out.push((w * tau).sin());
        out.push((w * tau).cos());
    }
    out.into()
}

/// MLP on `[z_t ; embed(t)]` with two tanh hidden layers.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserNet {
    pub(crate) mlp: Mlp,
    latent_dim: usize,
    train_steps: usize,
}

impl DenoiserNet {
    pub fn init(rng: &mut RandomSource, latent_dim: usize, hidden: usize, train_steps: usize) -> Self {
        let mlp = Mlp::init(rng, &[latent_dim + TIME_EMBED_DIM, hidden, hidden, latent_dim]);
        Self {
            mlp,
            latent_dim,
            train_steps,
        }
    }

    pub(crate) fn from_mlp(mlp: Mlp, train_steps: usize) -> Self {
        let latent_dim = mlp.output_dim();
        Self {
            mlp,
            latent_dim,
            train_steps,
        }
    }

    pub fn hidden(&self) -> usize {
        self.mlp.layers[0].fan_out()
    }

    pub fn train_steps(&self) -> usize {
        self.train_steps
    }

    pub fn is_finite(&self) -> bool {
        self.mlp.params().iter().all(|v| v.is_finite())
    }

    fn input(&self, zt: &Vector, t: usize) -> Vector {
        zt.concat(&time_embedding(t, self.train_steps))
    }

    pub(crate) fn trace(&self, zt: &Vector, t: usize) -> MlpTrace {
        self.mlp.trace(&self.input(zt, t))
    }
}

impl Parameterized for DenoiserNet {
    fn num_params(&self) -> usize {
        self.mlp.num_params()
    }

    fn params(&self) -> Vec<f64> {
        self.mlp.params()
    }

    fn set_params(&mut self, p: &[f64]) {
        self.mlp.set_params(p)
    }
}

impl NoisePredictor for DenoiserNet {
    fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    fn predict(&self, zt: &Vector, t: usize) -> Vector {
        self.mlp.forward(&self.input(zt, t))
    }

    fn pullback(&self, zt: &Vector, t: usize, grad_out: &Vector) -> Vector {
        let g = self.mlp.pullback(&self.input(zt, t), grad_out);
        g.head(self.latent_dim)
    }
}

/// Exact `E[ε | z_t]` when `z₀ ~ N(0, v·I)`:
/// `ε̂ = √(1−ᾱ_t)/(ᾱ_t·v + 1 − ᾱ_t) · z_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPriorDenoiser {
    latent_dim: usize,
    variance: f64,
    alpha_bar: Vector,
}

impl GaussianPriorDenoiser {
    /// `alpha_bar` is the training schedule's table, indexed by `t − 1`.
    pub fn new(latent_dim: usize, variance: f64, alpha_bar: &Vector) -> Self {
        Self {
            latent_dim,
            variance,
            alpha_bar: alpha_bar.clone(),
        }
    }

    fn gain(&self, t: usize) -> f64 {
        let ab = self.alpha_bar[t - 1];
        (1.0 - ab).sqrt() / (ab * self.variance + 1.0 - ab)
    }
}

impl NoisePredictor for GaussianPriorDenoiser {
    fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    fn predict(&self, zt: &Vector, t: usize) -> Vector {
        zt.scale(self.gain(t))
    }

    fn pullback(&self, _zt: &Vector, t: usize, grad_out: &Vector) -> Vector {
        grad_out.scale(self.gain(t))
    }
}

impl<P: NoisePredictor + ?Sized> NoisePredictor for &P {
    fn latent_dim(&self) -> usize {
        (**self).latent_dim()
    }

    fn predict(&self, zt: &Vector, t: usize) -> Vector {
        (**self).predict(zt, t)
    }

    fn pullback(&self, zt: &Vector, t: usize, grad_out: &Vector) -> Vector {
        (**self).pullback(zt, t, grad_out)
    }
}
