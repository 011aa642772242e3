use super::config::MapConfig;
use super::posterior::check_shapes;
use crate::error::{Error, Result};
use crate::forward::Measurement;
use crate::models::Decoder;
use crate::tensor::Vector;

#[derive(Debug, Clone, PartialEq)]
pub struct MapEstimate {
    /// Optimised leading `k` latent coordinates.
    pub z: Vector,
    /// `D(pad_k(z))`
    pub x: Vector,
    pub objective: f64,
    pub iterations: usize,
}

/// `½‖y − A(D(pad_k(z)))‖² + (γ/2)‖z‖²`
pub fn map_objective(m: &Measurement, decoder: &impl Decoder, gamma: f64, z: &Vector) -> Result<f64> {
    let x = decoder.decode(&z.padded(decoder.latent_dim()));
    Ok(0.5 * m.operator.residual_sq(&x, &m.y)? + 0.5 * gamma * z.norm_sq())
}

/// Gradient descent from `z = 0` over the first `k` latent coordinates.
pub fn latent_map_estimate(m: &Measurement, decoder: &impl Decoder, cfg: &MapConfig) -> Result<MapEstimate> {
    let d = decoder.latent_dim();
    check_shapes(m, decoder, d)?;
    cfg.validate(d)?;
    let k = cfg.k;
    let mut z = Vector::zeros(k);
    let mut iterations = 0;
    for it in 0..cfg.steps {
        let full = z.padded(d);
        let x = decoder.decode(&full);
        let gx = m.operator.residual_gradient(&x, &m.y)?;
        let mut g = decoder.pullback(&full, &gx).head(k).scale(0.5);
        g.axpy(cfg.gamma, &z);
        if !g.is_finite() {
            return Err(Error::NonFiniteObjective { iteration: it });
        }
        if g.norm() <= cfg.tol {
            break;
        }
        z.axpy(-cfg.step_size, &g);
        iterations = it + 1;
    }
    let objective = map_objective(m, decoder, cfg.gamma, &z)?;
    if !objective.is_finite() {
        return Err(Error::NonFiniteObjective { iteration: iterations });
    }
    let x = decoder.decode(&z.padded(d));
    Ok(MapEstimate {
        z,
        x,
        objective,
        iterations,
    })
}
