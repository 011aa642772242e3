use super::config::{Guidance, InnerSolver, InversionConfig};
use crate::diffusion::{predict_z0_unchecked, NoisePredictor, NoiseSchedule};
use crate::error::{dim_check, Error, Result};
use crate::forward::Measurement;
use crate::models::{truncate_unchecked, Decoder};
use crate::tensor::{RandomSource, Vector};

/// Output of a sampler run.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorRun {
    /// Returned signal estimate.
    pub x: Vector,
    /// Clean-latent prediction from the final iteration.
    pub z0_hat: Vector,
    /// Final latent iterate.
    pub z: Vector,
    /// `z_T, …, z_0` when recording was requested.
    pub trajectory: Vec<Vector>,
    /// `‖y − A(D(z_T))‖`
    pub initial_residual: f64,
    /// `‖y − A(x)‖`
    pub final_residual: f64,
}

/// `∇_z ‖y − A(D(z))‖²`
pub(crate) fn data_gradient(m: &Measurement, decoder: &impl Decoder, z: &Vector) -> Result<Vector> {
    let x = decoder.decode(z);
    let gx = m.operator.residual_gradient(&x, &m.y)?;
    Ok(decoder.pullback(z, &gx))
}

pub(crate) fn residual_norm(m: &Measurement, decoder: &impl Decoder, z: &Vector) -> Result<f64> {
    Ok(m.operator.residual_sq(&decoder.decode(z), &m.y)?.sqrt())
}

pub(crate) fn check_shapes(m: &Measurement, decoder: &impl Decoder, latent_dim: usize) -> Result<()> {
    dim_check("decoder latent dim", latent_dim, decoder.latent_dim())?;
    dim_check("operator input length", decoder.output_dim(), m.operator.input_len())?;
    dim_check("measurement length", m.operator.output_len(), m.y.len())
}

/// Iterates from [`inner_solve`], with the objective after each step.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub z: Vector,
    /// Objective at the initial point followed by one value per step.
    pub objectives: Vec<f64>,
}

/// `‖y − A(D(z))‖² + ‖z − z′‖²/(2σ_t²)`
pub fn inner_objective(m: &Measurement, decoder: &impl Decoder, z: &Vector, z_prime: &Vector, sigma_t: f64) -> Result<f64> {
    let data = m.operator.residual_sq(&decoder.decode(z), &m.y)?;
    Ok(data + z.dist_sq(z_prime) / (2.0 * sigma_t * sigma_t))
}

/// Minimises the inner data-consistency objective from `init`.
#[allow(clippy::too_many_arguments)]
pub fn inner_solve(
    m: &Measurement,
    decoder: &impl Decoder,
    z_prime: &Vector,
    sigma_t: f64,
    init: &Vector,
    steps: usize,
    step_size: f64,
    solver: InnerSolver,
) -> Result<InnerResult> {
    if !(sigma_t > 0.0) {
        return Err(Error::DegenerateVariance { t: 0 });
    }
    let var = sigma_t * sigma_t;
    let mut z = init.clone();
    let mut objectives = Vec::with_capacity(steps + 1);
    objectives.push(inner_objective(m, decoder, &z, z_prime, sigma_t)?);
    for it in 0..steps {
        let g = data_gradient(m, decoder, &z)?;
        z = match solver {
            InnerSolver::ProximalGradient => {
                let v = z.sub(&g.scale(step_size));
                v.scale(var).add(&z_prime.scale(step_size)).scale(1.0 / (var + step_size))
            }
            InnerSolver::GradientDescent => {
                let full = g.add(&z.sub(z_prime).scale(1.0 / var));
                z.sub(&full.scale(step_size))
            }
        };
        let f = inner_objective(m, decoder, &z, z_prime, sigma_t)?;
        if !f.is_finite() || !z.is_finite() {
            return Err(Error::NonFiniteObjective { iteration: it });
        }
        objectives.push(f);
    }
    Ok(InnerResult { z, objectives })
}

fn maybe_truncate(z: Vector, k: Option<usize>) -> Vector {
    match k {
        Some(k) => truncate_unchecked(&z, k),
        None => z,
    }
}

fn reverse_schedule(s: &NoiseSchedule, cfg: &InversionConfig) -> Result<NoiseSchedule> {
    match cfg.steps {
        Some(n) => s.respaced(n),
        None => Ok(s.clone()),
    }
}

/// Posterior sampling with a diffusion prior and quadratic data consistency.
///
/// Per step: predict `ẑ₀`, form the DDPM proposal
/// `z′ = √α_t(1−ᾱ_{t−1})/(1−ᾱ_t)·z_t + √ᾱ_{t−1}β_t/(1−ᾱ_t)·ẑ₀ + σ_t·ε`,
/// minimise `‖y − A(D(z))‖² + ‖z − z′‖²/(2σ_t²)` from `ẑ₀`, then truncate.
/// Random draws: `z_T`, then one `ε` per step.
pub fn tunable_posterior_sample(
    m: &Measurement,
    decoder: &impl Decoder,
    net: &impl NoisePredictor,
    s: &NoiseSchedule,
    cfg: &InversionConfig,
    rng: &mut RandomSource,
) -> Result<PosteriorRun> {
    let d = net.latent_dim();
    check_shapes(m, decoder, d)?;
    cfg.validate(d)?;
    let s = reverse_schedule(s, cfg)?;
    let mut z = rng.normal_vec(d);
    let initial_residual = residual_norm(m, decoder, &z)?;
    let mut trajectory = Vec::new();
    let mut z0_hat = z.clone();
    for t in (1..=s.steps()).rev() {
        if cfg.record_trajectory {
            trajectory.push(z.clone());
        }
        let sigma_t = cfg.sigma_at(&s, t)?;
        let eps_hat = net.predict(&z, s.net_time(t));
        z0_hat = predict_z0_unchecked(&s, &z, &eps_hat, t);
        let (a, ab, ab_prev, b) = (s.alpha(t), s.alpha_bar(t), s.alpha_bar(t - 1), s.beta(t));
        let c_t = a.sqrt() * (1.0 - ab_prev) / (1.0 - ab);
        let c_0 = ab_prev.sqrt() * b / (1.0 - ab);
        let noise = rng.normal_vec(d);
        let z_prime = z.scale(c_t).add(&z0_hat.scale(c_0)).add(&noise.scale(sigma_t));
        let inner = inner_solve(
            m,
            decoder,
            &z_prime,
            sigma_t,
            &z0_hat,
            cfg.inner_steps,
            cfg.inner_step_size,
            cfg.inner_solver,
        )?;
        z = maybe_truncate(inner.z, cfg.k);
        if !z.is_finite() {
            return Err(Error::NonFiniteObjective { iteration: s.steps() - t });
        }
    }
    if cfg.record_trajectory {
        trajectory.push(z.clone());
    }
    let x = if cfg.return_truncated {
        decoder.decode(&z)
    } else {
        decoder.decode(&z0_hat)
    };
    let final_residual = m.operator.residual_sq(&x, &m.y)?.sqrt();
    Ok(PosteriorRun {
        x,
        z0_hat,
        z,
        trajectory,
        initial_residual,
        final_residual,
    })
}

/// Reverse diffusion with a single gradient step of data consistency per
/// iteration, differentiated through `ẑ₀(z_t)`.
///
/// Random draws match [`generate`](crate::diffusion::generate): `z_T`, then
/// one `ε′` per step. Returns `D(z₀)`.
pub fn gradient_guided_sample(
    m: &Measurement,
    decoder: &impl Decoder,
    net: &impl NoisePredictor,
    s: &NoiseSchedule,
    cfg: &InversionConfig,
    rng: &mut RandomSource,
) -> Result<PosteriorRun> {
    let d = net.latent_dim();
    check_shapes(m, decoder, d)?;
    cfg.validate(d)?;
    let s = reverse_schedule(s, cfg)?;
    let mut z = rng.normal_vec(d);
    let initial_residual = residual_norm(m, decoder, &z)?;
    let mut trajectory = Vec::new();
    let mut z0_hat = z.clone();
    for t in (1..=s.steps()).rev() {
        if cfg.record_trajectory {
            trajectory.push(z.clone());
        }
        let sigma_t = cfg.sigma_at(&s, t)?;
        let nt = s.net_time(t);
        let eps_hat = net.predict(&z, nt);
        z0_hat = predict_z0_unchecked(&s, &z, &eps_hat, t);
        let noise = rng.normal_vec(d);
        let mut next = crate::diffusion::reverse_mean(&s, &z, &eps_hat, t).add(&noise.scale(sigma_t));
        if cfg.zeta != 0.0 {
            let ab = s.alpha_bar(t);
            let g0 = data_gradient(m, decoder, &z0_hat)?;
            let g_eps = net.pullback(&z, nt, &g0);
            let g = g0.sub(&g_eps.scale((1.0 - ab).sqrt())).scale(1.0 / ab.sqrt());
            next = next.sub(&g.scale(cfg.zeta));
        }
        z = maybe_truncate(next, cfg.k);
        if !z.is_finite() {
            return Err(Error::NonFiniteObjective { iteration: s.steps() - t });
        }
    }
    if cfg.record_trajectory {
        trajectory.push(z.clone());
    }
    let x = decoder.decode(&z);
    let final_residual = m.operator.residual_sq(&x, &m.y)?.sqrt();
    Ok(PosteriorRun {
        x,
        z0_hat,
        z,
        trajectory,
        initial_residual,
        final_residual,
    })
}

/// Dispatches on [`InversionConfig::guidance`].
pub fn run_inversion(
    m: &Measurement,
    decoder: &impl Decoder,
    net: &impl NoisePredictor,
    s: &NoiseSchedule,
    cfg: &InversionConfig,
    rng: &mut RandomSource,
) -> Result<PosteriorRun> {
    match cfg.guidance {
        Guidance::QuadraticProx => tunable_posterior_sample(m, decoder, net, s, cfg, rng),
        Guidance::Gradient => gradient_guided_sample(m, decoder, net, s, cfg, rng),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::diffusion::{generate, make_schedule, GaussianPriorDenoiser};
    use crate::forward::ForwardOperator;
    use crate::inversion::SigmaPolicy;
    use crate::models::IdentityDecoder;

    fn identity_measurement(y: Vec<f64>) -> Measurement {
        let n = y.len();
        Measurement::new(Arc::new(ForwardOperator::identity(n)), y.into(), 0.0).unwrap()
    }

    #[test]
    fn inner_solver_reaches_closed_form() {
        let m = identity_measurement(vec![4.0]);
        let var: f64 = 0.5;
        let z_prime: Vector = vec![2.0].into();
        let expected = (2.0 * var * 4.0 + 2.0) / (2.0 * var + 1.0);
        assert!((expected - 3.0).abs() < 1e-15);
        // Lipschitz constant of the full gradient: 2 + 1/σ².
        let lip = 2.0 + 1.0 / var;
        for solver in [InnerSolver::GradientDescent, InnerSolver::ProximalGradient] {
            let step = match solver {
                InnerSolver::GradientDescent => 1.0 / (2.0 * lip),
                InnerSolver::ProximalGradient => 1.0 / (2.0 * 2.0),
            };
            let r = inner_solve(&m, &IdentityDecoder(1), &z_prime, var.sqrt(), &Vector::zeros(1), 500, step, solver)
                .unwrap();
            assert!((r.z[0] - 3.0).abs() < 1e-6, "{solver:?}: {}", r.z[0]);
            assert!(r.objectives.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
    }

    #[test]
    fn inner_objective_non_increasing_with_defaults() {
        let mut rng = RandomSource::from_seed(1);
        let op = Arc::new(ForwardOperator::dense_gaussian(6, 4, 3).unwrap());
        let m = op.measure(&rng.normal_vec(4), 0.1, &mut rng).unwrap();
        let cfg = InversionConfig::default();
        for sigma_t in [1e-4, 0.01, 0.1, 1.0] {
            let r = inner_solve(
                &m,
                &IdentityDecoder(4),
                &rng.normal_vec(4),
                sigma_t,
                &rng.normal_vec(4),
                cfg.inner_steps,
                cfg.inner_step_size,
                cfg.inner_solver,
            )
            .unwrap();
            assert!(r.objectives.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        }
    }

    fn gaussian_setup() -> (NoiseSchedule, GaussianPriorDenoiser) {
        let s = make_schedule(60, 1e-3, 0.08).unwrap();
        let den = GaussianPriorDenoiser::new(3, 1.0, s.alpha_bars());
        (s, den)
    }

    #[test]
    fn full_truncation_is_a_no_op() {
        let (s, den) = gaussian_setup();
        let m = identity_measurement(vec![0.5, -1.0, 2.0]);
        let base = InversionConfig {
            record_trajectory: true,
            ..InversionConfig::default()
        };
        for guidance in [Guidance::QuadraticProx, Guidance::Gradient] {
            let untruncated = InversionConfig {
                guidance,
                zeta: 0.1,
                ..base.clone()
            };
            let full = InversionConfig {
                k: Some(3),
                ..untruncated.clone()
            };
            let a = run_inversion(&m, &IdentityDecoder(3), &den, &s, &untruncated, &mut RandomSource::from_seed(2)).unwrap();
            let b = run_inversion(&m, &IdentityDecoder(3), &den, &s, &full, &mut RandomSource::from_seed(2)).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.trajectory.len(), s.steps() + 1);
        }
    }

    #[test]
    fn posterior_reduces_residual() {
        let (s, den) = gaussian_setup();
        let m = identity_measurement(vec![0.8, -0.4, 1.1]);
        let cfg = InversionConfig {
            k: Some(3),
            ..InversionConfig::default()
        };
        let r = tunable_posterior_sample(&m, &IdentityDecoder(3), &den, &s, &cfg, &mut RandomSource::from_seed(3)).unwrap();
        assert!(r.final_residual <= r.initial_residual);
    }

    #[test]
    fn zero_requested_variance_is_degenerate() {
        let (s, den) = gaussian_setup();
        let m = identity_measurement(vec![0.0; 3]);
        let cfg = InversionConfig {
            sigma: SigmaPolicy::Constant { value: 0.0 },
            ..InversionConfig::default()
        };
        let err = tunable_posterior_sample(&m, &IdentityDecoder(3), &den, &s, &cfg, &mut RandomSource::from_seed(4));
        assert!(matches!(err, Err(Error::DegenerateVariance { .. })));
    }

    #[test]
    fn unguided_run_matches_generate() {
        let (s, den) = gaussian_setup();
        let m = identity_measurement(vec![1.0, 2.0, 3.0]);
        for eta in [0.0, 1.0] {
            let cfg = InversionConfig {
                guidance: Guidance::Gradient,
                zeta: 0.0,
                sigma: SigmaPolicy::DdpmFraction { eta },
                record_trajectory: true,
                ..InversionConfig::default()
            };
            let guided = gradient_guided_sample(&m, &IdentityDecoder(3), &den, &s, &cfg, &mut RandomSource::from_seed(5)).unwrap();
            let plain = generate(&s, &den, eta, true, &mut RandomSource::from_seed(5)).unwrap();
            assert_eq!(guided.trajectory, plain.trajectory);
        }
    }

    #[test]
    fn guidance_improves_fit_and_truncation_holds() {
        let (s, den) = gaussian_setup();
        let m = identity_measurement(vec![1.5, -0.5, 0.7]);
        let mut cfg = InversionConfig {
            guidance: Guidance::Gradient,
            sigma: SigmaPolicy::DdpmFraction { eta: 1.0 },
            zeta: 0.0,
            ..InversionConfig::default()
        };
        let off = gradient_guided_sample(&m, &IdentityDecoder(3), &den, &s, &cfg, &mut RandomSource::from_seed(6)).unwrap();
        cfg.zeta = 0.05;
        let on = gradient_guided_sample(&m, &IdentityDecoder(3), &den, &s, &cfg, &mut RandomSource::from_seed(6)).unwrap();
        assert!(on.final_residual < off.final_residual);

        cfg.k = Some(1);
        cfg.record_trajectory = true;
        let cut = gradient_guided_sample(&m, &IdentityDecoder(3), &den, &s, &cfg, &mut RandomSource::from_seed(6)).unwrap();
        for z in &cut.trajectory[1..] {
            assert_eq!(&z.as_slice()[1..], &[0.0, 0.0]);
        }
    }

    #[test]
    fn respaced_run_is_finite() {
        let (s, den) = gaussian_setup();
        let m = identity_measurement(vec![0.2, 0.1, -0.3]);
        let cfg = InversionConfig {
            steps: Some(10),
            k: Some(2),
            ..InversionConfig::default()
        };
        let r = tunable_posterior_sample(&m, &IdentityDecoder(3), &den, &s, &cfg, &mut RandomSource::from_seed(7)).unwrap();
        assert!(r.x.is_finite());
    }
}
