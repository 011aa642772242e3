use std::path::Path;

use serde::{Deserialize, Serialize};

use super::denoiser::{DenoiserNet, NoisePredictor, TIME_EMBED_DIM};
use super::schedule::{forward_marginal_with, NoiseSchedule, ScheduleSpec};
use crate::error::{Error, Result};
use crate::models::{truncate_unchecked, Mlp, Momentum, Parameterized, TrainConfig, TrainReport, TruncationLaw};
use crate::persist;
use crate::tensor::{RandomSource, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdmConfig {
    pub schedule: ScheduleSpec,
    pub hidden: usize,
    /// Weight of the truncated branch.
    pub lambda_mix: f64,
    /// Success parameter of the truncation law over the latent dimension.
    pub p: f64,
    /// Decay of the exponential moving average of the weights; the returned
    /// net carries the averaged weights. 0 returns the last iterate.
    pub ema_decay: f64,
    pub train: TrainConfig,
}

impl Default for LdmConfig {
    fn default() -> Self {
        Self {
            schedule: ScheduleSpec::default(),
            hidden: 64,
            lambda_mix: 0.1,
            p: 0.1,
            ema_decay: 0.999,
            train: TrainConfig::default(),
        }
    }
}

impl LdmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda_mix) {
            return Err(Error::Config(format!("lambda_mix must lie in [0, 1], got {}", self.lambda_mix)));
        }
        if !(0.0..1.0).contains(&self.ema_decay) {
            return Err(Error::Config(format!("ema_decay must lie in [0, 1), got {}", self.ema_decay)));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden width must be at least 1".into()));
        }
        self.schedule.build()?;
        TruncationLaw::new(1, self.p)?;
        self.train.validate()
    }
}

/// One draw of the training randomness, in the order it is sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct LdmDraw {
    pub t: usize,
    pub eps: Vector,
    pub k: usize,
}

impl LdmDraw {
    pub fn sample(s: &NoiseSchedule, d: usize, law: &TruncationLaw, rng: &mut RandomSource) -> Self {
        let t = 1 + rng.below(s.steps() as u64) as usize;
        let eps = rng.normal_vec(d);
        let k = law.sample(rng);
        Self { t, eps, k }
    }
}

/// Samples `(t, ε, k)` and evaluates the mixed objective
/// `(1−λ)‖ε − ε_θ(z_t, t)‖² + λ‖ε − ε_θ(trunc(z_t, k), t)‖²`.
pub fn ldm_loss(
    net: &impl NoisePredictor,
    s: &NoiseSchedule,
    z0: &Vector,
    lambda_mix: f64,
    law: &TruncationLaw,
    rng: &mut RandomSource,
) -> Result<f64> {
    let draw = LdmDraw::sample(s, z0.len(), law, rng);
    ldm_loss_with(net, s, z0, lambda_mix, &draw)
}

pub fn ldm_loss_with(net: &impl NoisePredictor, s: &NoiseSchedule, z0: &Vector, lambda_mix: f64, draw: &LdmDraw) -> Result<f64> {
    let zt = forward_marginal_with(s, z0, draw.t, &draw.eps)?;
    let t = s.net_time(draw.t);
    let plain = net.predict(&zt, t).dist_sq(&draw.eps);
    if lambda_mix == 0.0 {
        return Ok(plain);
    }
    let cut = net.predict(&truncate_unchecked(&zt, draw.k), t).dist_sq(&draw.eps);
    Ok((1.0 - lambda_mix) * plain + lambda_mix * cut)
}

/// Mixed loss for a fixed draw, accumulating its parameter gradient.
pub fn ldm_loss_and_grad(
    net: &DenoiserNet,
    s: &NoiseSchedule,
    z0: &Vector,
    lambda_mix: f64,
    draw: &LdmDraw,
    grad: &mut [f64],
) -> f64 {
    let ab = s.alpha_bar(draw.t);
    let zt = z0.scale(ab.sqrt()).add(&draw.eps.scale((1.0 - ab).sqrt()));
    let t = s.net_time(draw.t);
    let mut loss = 0.0;
    for (weight, input) in [(1.0 - lambda_mix, zt.clone()), (lambda_mix, truncate_unchecked(&zt, draw.k))] {
        if weight == 0.0 {
            continue;
        }
        let tr = net.trace(&input, t);
        let diff = tr.output.sub(&draw.eps);
        loss += weight * diff.norm_sq();
        net.mlp.backward(&tr, &diff.scale(2.0 * weight), grad);
    }
    loss
}

/// Minibatch momentum SGD on the mixed objective. Per example the draws
/// are: data index, then `t`, `ε`, `k`.
pub fn ldm_train(data: &[Vector], config: &LdmConfig) -> Result<(DenoiserNet, TrainReport)> {
    let d = crate::models::check_dataset(data)?;
    config.validate()?;
    let s = config.schedule.build()?;
    let law = TruncationLaw::new(d, config.p)?;
    let tc = &config.train;
    let mut rng = RandomSource::new(tc.seed, 0xD1FF);
    let mut net = DenoiserNet::init(&mut rng, d, config.hidden, s.steps());
    let mut params = net.params();
    let mut opt = Momentum::new(params.len(), tc.step_size, tc.momentum);
    let mut ema = params.clone();
    let decay = config.ema_decay;
    let mut trace = Vec::with_capacity(tc.steps);
    for step in 0..tc.steps {
        let mut grad = vec![0.0; params.len()];
        let mut loss = 0.0;
        for _ in 0..tc.batch_size {
            let z0 = &data[rng.below(data.len() as u64) as usize];
            let draw = LdmDraw::sample(&s, d, &law, &mut rng);
            loss += ldm_loss_and_grad(&net, &s, z0, config.lambda_mix, &draw, &mut grad);
        }
        let scale = 1.0 / tc.batch_size as f64;
        loss *= scale;
        crate::models::check_finite_loss(step, loss)?;
        grad.iter_mut().for_each(|g| *g *= scale);
        trace.push(loss);
        opt.step(&mut params, &grad);
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::TrainingDiverged { step, loss });
        }
        net.set_params(&params);
        // Bias-corrected average: step 0 weights the fresh iterate fully.
        let w = decay.min((1.0 + step as f64) / (10.0 + step as f64));
        for (e, p) in ema.iter_mut().zip(&params) {
            *e = w * *e + (1.0 - w) * p;
        }
    }
    if decay > 0.0 {
        net.set_params(&ema);
    }
    Ok((net, TrainReport { loss_trace: trace }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    model: String,
    latent_dim: usize,
    time_embed_dim: usize,
    config: LdmConfig,
}

/// Writes the net with the configuration that produced it.
pub fn save_denoiser(net: &DenoiserNet, config: &LdmConfig, dir: &Path) -> Result<()> {
    persist::write_manifest(
        dir,
        &Manifest {
            model: "denoiser_mlp".into(),
            latent_dim: net.latent_dim(),
            time_embed_dim: TIME_EMBED_DIM,
            config: config.clone(),
        },
    )?;
    for (i, l) in net.mlp.layers.iter().enumerate() {
        persist::write_dense(dir, &format!("layer{i}"), l)?;
    }
    Ok(())
}

/// Reads a net and its training configuration.
pub fn load_denoiser(dir: &Path) -> Result<(DenoiserNet, LdmConfig)> {
    let m: Manifest = persist::read_manifest(dir)?;
    if m.model != "denoiser_mlp" || m.time_embed_dim != TIME_EMBED_DIM {
        return Err(Error::Config(format!("{} does not hold a compatible denoiser", dir.display())));
    }
    m.config.validate()?;
    let (d, h) = (m.latent_dim, m.config.hidden);
    let sizes = [d + TIME_EMBED_DIM, h, h, d];
    let layers = sizes
        .windows(2)
        .enumerate()
        .map(|(i, w)| persist::read_dense(dir, &format!("layer{i}"), w[0], w[1]))
        .collect::<Result<Vec<_>>>()?;
    let net = DenoiserNet::from_mlp(Mlp { layers }, m.config.schedule.steps);
    if !net.is_finite() {
        return Err(Error::Format("stored denoiser weights are not finite".into()));
    }
    Ok((net, m.config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::make_schedule;
    use crate::models::nn::testing::{finite_diff, max_rel_err};

    /// Returns a fixed vector regardless of input.
    struct Constant(Vector);

    impl NoisePredictor for Constant {
        fn latent_dim(&self) -> usize {
            self.0.len()
        }
        fn predict(&self, _: &Vector, _: usize) -> Vector {
            self.0.clone()
        }
        fn pullback(&self, zt: &Vector, _: usize, _: &Vector) -> Vector {
            Vector::zeros(zt.len())
        }
    }

    fn setup(seed: u64, d: usize) -> (DenoiserNet, NoiseSchedule, Vector, TruncationLaw, RandomSource) {
        let mut rng = RandomSource::new(seed, 77);
        let s = make_schedule(30, 1e-3, 0.1).unwrap();
        let net = DenoiserNet::init(&mut rng, d, 2 + seed as usize % 7, s.steps());
        let z0 = rng.normal_vec(d);
        (net, s, z0, TruncationLaw::new(d, 0.4).unwrap(), rng)
    }

    #[test]
    fn endpoints_of_the_mix() {
        let (net, s, z0, law, mut rng) = setup(1, 3);
        let mut draw = LdmDraw::sample(&s, 3, &law, &mut rng);
        let zt = forward_marginal_with(&s, &z0, draw.t, &draw.eps).unwrap();
        let standard = net.predict(&zt, draw.t).dist_sq(&draw.eps);
        assert_eq!(ldm_loss_with(&net, &s, &z0, 0.0, &draw).unwrap(), standard);
        draw.k = 3;
        assert_eq!(ldm_loss_with(&net, &s, &z0, 1.0, &draw).unwrap(), standard);
        let oracle = Constant(draw.eps.clone());
        assert_eq!(ldm_loss_with(&oracle, &s, &z0, 0.5, &draw).unwrap(), 0.0);
    }

    #[test]
    fn sampled_loss_uses_draw_order() {
        let (net, s, z0, law, rng) = setup(2, 3);
        let mut a = rng.clone();
        let mut b = rng.clone();
        let via_sample = ldm_loss(&net, &s, &z0, 0.3, &law, &mut a).unwrap();
        let draw = LdmDraw::sample(&s, 3, &law, &mut b);
        assert_eq!(via_sample, ldm_loss_with(&net, &s, &z0, 0.3, &draw).unwrap());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..20u64 {
            let d = 1 + seed as usize % 4;
            let (net, s, z0, law, mut rng) = setup(seed, d);
            let draw = LdmDraw::sample(&s, d, &law, &mut rng);
            let mut g = vec![0.0; net.num_params()];
            let loss = ldm_loss_and_grad(&net, &s, &z0, 0.35, &draw, &mut g);
            assert!((loss - ldm_loss_with(&net, &s, &z0, 0.35, &draw).unwrap()).abs() < 1e-12);
            let fd = finite_diff(&net.params(), 1e-5, |p| {
                let mut n2 = net.clone();
                n2.set_params(p);
                ldm_loss_with(&n2, &s, &z0, 0.35, &draw).unwrap()
            });
            assert!(max_rel_err(&g, &fd, 1e-6) < 1e-4, "seed {seed}");
        }
    }

    fn small_config(step_size: f64) -> LdmConfig {
        LdmConfig {
            schedule: ScheduleSpec {
                steps: 20,
                beta_start: 1e-3,
                beta_end: 0.1,
            },
            hidden: 8,
            lambda_mix: 0.2,
            p: 0.5,
            ema_decay: 0.0,
            train: TrainConfig {
                steps: 10,
                batch_size: 4,
                step_size,
                momentum: 0.9,
                seed: 3,
            },
        }
    }

    #[test]
    fn zero_step_and_determinism() {
        let mut rng = RandomSource::from_seed(4);
        let data: Vec<Vector> = (0..20).map(|_| rng.normal_vec(2)).collect();
        let cfg = small_config(0.0);
        let (net, _) = ldm_train(&data, &cfg).unwrap();
        let mut init_rng = RandomSource::new(3, 0xD1FF);
        assert_eq!(net, DenoiserNet::init(&mut init_rng, 2, 8, 20));

        let cfg = small_config(1e-2);
        let (a, ta) = ldm_train(&data, &cfg).unwrap();
        let (b, tb) = ldm_train(&data, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        assert_ne!(a, net);
    }

    #[test]
    fn ema_lags_the_last_iterate() {
        let mut rng = RandomSource::from_seed(4);
        let data: Vec<Vector> = (0..20).map(|_| rng.normal_vec(2)).collect();
        let last = ldm_train(&data, &small_config(1e-2)).unwrap().0;
        let cfg = LdmConfig {
            ema_decay: 0.9,
            ..small_config(1e-2)
        };
        let (avg, trace) = ldm_train(&data, &cfg).unwrap();
        assert_eq!(trace, ldm_train(&data, &small_config(1e-2)).unwrap().1);
        let init = DenoiserNet::init(&mut RandomSource::new(3, 0xD1FF), 2, 8, 20).params();
        let (a, l) = (avg.params(), last.params());
        let dist = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>();
        assert!(dist(&a, &init) < dist(&l, &init));
        assert!(dist(&a, &l) > 0.0);
        assert!(LdmConfig { ema_decay: 1.0, ..cfg }.validate().is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let mut rng = RandomSource::from_seed(5);
        let cfg = small_config(1e-2);
        let net = DenoiserNet::init(&mut rng, 3, 8, cfg.schedule.steps);
        let dir = tempfile::tempdir().unwrap();
        save_denoiser(&net, &cfg, dir.path()).unwrap();
        let (back, cfg2) = load_denoiser(dir.path()).unwrap();
        assert_eq!(back, net);
        assert_eq!(cfg2, cfg);
    }
}
