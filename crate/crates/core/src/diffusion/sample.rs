use super::denoiser::NoisePredictor;
use super::schedule::{predict_z0_unchecked, NoiseSchedule};
use crate::error::{dim_check, Error, Result};
use crate::tensor::{RandomSource, Vector};

/// Relative slack when comparing a requested `σ_t` with the DDPM ceiling.
const SIGMA_SLACK: f64 = 1e-12;

/// One reverse update
/// `z_{t−1} = (z_t − (1−α_t)/√(1−ᾱ_t)·ε_θ(z_t, t))/√α_t + σ_t·ε′`.
///
/// `ε′` is drawn even when `σ_t = 0`, so the stream position does not depend
/// on the variance policy.
pub fn reverse_step(
    s: &NoiseSchedule,
    net: &impl NoisePredictor,
    zt: &Vector,
    t: usize,
    sigma_t: f64,
    rng: &mut RandomSource,
) -> Result<Vector> {
    s.check_t(t)?;
    dim_check("latent length", net.latent_dim(), zt.len())?;
    check_sigma(s, t, sigma_t)?;
    let eps_hat = net.predict(zt, s.net_time(t));
    let noise = rng.normal_vec(zt.len());
    Ok(reverse_mean(s, zt, &eps_hat, t).add(&noise.scale(sigma_t)))
}

pub(crate) fn check_sigma(s: &NoiseSchedule, t: usize, sigma_t: f64) -> Result<()> {
    let ceiling = s.ddpm_sigma(t);
    if !(sigma_t >= 0.0 && sigma_t <= ceiling * (1.0 + SIGMA_SLACK)) {
        return Err(Error::InvalidArgument(format!(
            "sigma_t = {sigma_t} outside [0, {ceiling}] at t = {t}"
        )));
    }
    Ok(())
}

pub(crate) fn reverse_mean(s: &NoiseSchedule, zt: &Vector, eps_hat: &Vector, t: usize) -> Vector {
    let a = s.alpha(t);
    let c = (1.0 - a) / (1.0 - s.alpha_bar(t)).sqrt();
    zt.sub(&eps_hat.scale(c)).scale(1.0 / a.sqrt())
}

/// Result of an unconditional run.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRun {
    pub z0: Vector,
    /// `z_T, z_{T−1}, …, z_0` when recording was requested.
    pub trajectory: Vec<Vector>,
}

/// Ancestral sampling from `z_T ~ N(0, I)` with `σ_t = eta·σ_t^DDPM`
/// (`eta = 0` is DDIM, `eta = 1` is DDPM).
pub fn generate(
    s: &NoiseSchedule,
    net: &impl NoisePredictor,
    eta: f64,
    record: bool,
    rng: &mut RandomSource,
) -> Result<SampleRun> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!("eta must lie in [0, 1], got {eta}")));
    }
    let mut z = rng.normal_vec(net.latent_dim());
    let mut trajectory = Vec::new();
    for t in (1..=s.steps()).rev() {
        if record {
            trajectory.push(z.clone());
        }
        z = reverse_step(s, net, &z, t, eta * s.ddpm_sigma(t), rng)?;
    }
    if record {
        trajectory.push(z.clone());
    }
    Ok(SampleRun { z0: z, trajectory })
}

/// Non-Markovian DDIM update
/// `z_{t−1} = √ᾱ_{t−1}·ẑ₀ + √(1−ᾱ_{t−1}−σ²)·ε_θ + σ·ε′` with
/// `σ = eta·√((1−ᾱ_{t−1})/(1−ᾱ_t))·√(1−ᾱ_t/ᾱ_{t−1})`. `eta = 0` is
/// deterministic and keeps the marginal variance; `eta = 1` matches DDPM.
pub fn ddim_step(
    s: &NoiseSchedule,
    net: &impl NoisePredictor,
    zt: &Vector,
    t: usize,
    eta: f64,
    rng: &mut RandomSource,
) -> Result<Vector> {
    s.check_t(t)?;
    dim_check("latent length", net.latent_dim(), zt.len())?;
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!("eta must lie in [0, 1], got {eta}")));
    }
    let (ab, ab_prev) = (s.alpha_bar(t), s.alpha_bar(t - 1));
    let eps_hat = net.predict(zt, s.net_time(t));
    let z0 = predict_z0_unchecked(s, zt, &eps_hat, t);
    let sigma = eta * ((1.0 - ab_prev) / (1.0 - ab) * (1.0 - ab / ab_prev)).max(0.0).sqrt();
    let dir = (1.0 - ab_prev - sigma * sigma).max(0.0).sqrt();
    let noise = rng.normal_vec(zt.len());
    let mut out = z0.scale(ab_prev.sqrt());
    out.axpy(dir, &eps_hat);
    out.axpy(sigma, &noise);
    Ok(out)
}

/// [`generate`] with [`ddim_step`] updates.
pub fn generate_ddim(
    s: &NoiseSchedule,
    net: &impl NoisePredictor,
    eta: f64,
    record: bool,
    rng: &mut RandomSource,
) -> Result<SampleRun> {
    let mut z = rng.normal_vec(net.latent_dim());
    let mut trajectory = Vec::new();
    for t in (1..=s.steps()).rev() {
        if record {
            trajectory.push(z.clone());
        }
        z = ddim_step(s, net, &z, t, eta, rng)?;
    }
    if record {
        trajectory.push(z.clone());
    }
    Ok(SampleRun { z0: z, trajectory })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{make_schedule, predict_z0, GaussianPriorDenoiser};
    use crate::tensor::RunningStats;

    struct Zero(usize);

    impl NoisePredictor for Zero {
        fn latent_dim(&self) -> usize {
            self.0
        }
        fn predict(&self, zt: &Vector, _: usize) -> Vector {
            Vector::zeros(zt.len())
        }
        fn pullback(&self, zt: &Vector, _: usize, _: &Vector) -> Vector {
            Vector::zeros(zt.len())
        }
    }

    #[test]
    fn zero_denoiser_rescales() {
        // Constant β = 0.19 gives α = 0.81.
        let s = make_schedule(3, 0.19, 0.19).unwrap();
        let z: Vector = vec![0.9, -1.8].into();
        let mut rng = RandomSource::from_seed(1);
        let out = reverse_step(&s, &Zero(2), &z, 2, 0.0, &mut rng).unwrap();
        assert!(out.sub(&z.scale(1.0 / 0.9)).max_abs() < 1e-15);
    }

    #[test]
    fn ddim_step_is_deterministic() {
        let s = make_schedule(10, 1e-3, 0.1).unwrap();
        let den = GaussianPriorDenoiser::new(2, 2.0, s.alpha_bars());
        let z: Vector = vec![0.3, 0.7].into();
        let a = reverse_step(&s, &den, &z, 5, 0.0, &mut RandomSource::from_seed(1)).unwrap();
        let b = reverse_step(&s, &den, &z, 5, 0.0, &mut RandomSource::from_seed(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ddpm_noise_variance() {
        let s = make_schedule(10, 1e-3, 0.1).unwrap();
        let t = 6;
        let sigma = s.ddpm_sigma(t);
        let z: Vector = vec![0.5, -0.5].into();
        let mut rng = RandomSource::from_seed(3);
        let mut stats = [RunningStats::default(), RunningStats::default()];
        for _ in 0..100_000 {
            let out = reverse_step(&s, &Zero(2), &z, t, sigma, &mut rng).unwrap();
            for i in 0..2 {
                stats[i].push(out[i]);
            }
        }
        for st in &stats {
            assert!((st.variance() / (sigma * sigma) - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn sigma_out_of_range() {
        let s = make_schedule(10, 1e-3, 0.1).unwrap();
        let mut rng = RandomSource::from_seed(4);
        let z = Vector::zeros(2);
        assert!(matches!(
            reverse_step(&s, &Zero(2), &z, 4, -0.1, &mut rng),
            Err(Error::InvalidArgument(_))
        ));
        assert!(reverse_step(&s, &Zero(2), &z, 4, 2.0 * s.ddpm_sigma(4), &mut rng).is_err());
        assert!(reverse_step(&s, &Zero(2), &z, 0, 0.0, &mut rng).is_err());
    }

    #[test]
    fn exact_denoiser_generates_target_moments() {
        let s = make_schedule(100, 1e-4, 0.05).unwrap();
        let den = GaussianPriorDenoiser::new(2, 1.0, s.alpha_bars());
        let mut rng = RandomSource::from_seed(5);
        let mut stats = RunningStats::default();
        for _ in 0..5000 {
            let z = generate(&s, &den, 1.0, false, &mut rng).unwrap().z0;
            stats.push(z[0]);
        }
        assert!(stats.mean().abs() < 0.05);
        assert!((stats.variance() - 1.0).abs() < 0.1);
    }

    #[test]
    fn ddim_generation_is_reproducible() {
        let s = make_schedule(40, 1e-3, 0.05).unwrap();
        let den = GaussianPriorDenoiser::new(3, 0.5, s.alpha_bars());
        let a = generate(&s, &den, 0.0, true, &mut RandomSource::from_seed(6)).unwrap();
        let b = generate(&s, &den, 0.0, true, &mut RandomSource::from_seed(6)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trajectory.len(), 41);
    }

    #[test]
    fn ddim_update_keeps_marginal_variance() {
        let s = make_schedule(100, 1e-4, 0.2).unwrap();
        let v = 4.0;
        let den = GaussianPriorDenoiser::new(1, v, s.alpha_bars());
        for eta in [0.0, 1.0] {
            let mut rng = RandomSource::from_seed(8);
            let mut stats = RunningStats::default();
            for _ in 0..4000 {
                stats.push(generate_ddim(&s, &den, eta, false, &mut rng).unwrap().z0[0]);
            }
            assert!((stats.variance() / v - 1.0).abs() < 0.1, "eta {eta}: {}", stats.variance());
        }
        let mut rng = RandomSource::from_seed(8);
        let mut stats = RunningStats::default();
        for _ in 0..4000 {
            stats.push(generate(&s, &den, 0.0, false, &mut rng).unwrap().z0[0]);
        }
        assert!(stats.variance() < 0.5 * v);
    }

    #[test]
    fn ddim_last_step_returns_prediction() {
        let s = make_schedule(10, 1e-3, 0.1).unwrap();
        let den = GaussianPriorDenoiser::new(2, 2.0, s.alpha_bars());
        let z: Vector = vec![0.3, -1.2].into();
        let a = ddim_step(&s, &den, &z, 1, 1.0, &mut RandomSource::from_seed(1)).unwrap();
        let b = predict_z0(&s, &z, &den.predict(&z, 1), 1).unwrap();
        for i in 0..2 {
            assert!((a[i] - b[i]).abs() < 1e-12);
        }
    }
}
