use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    check_dataset, check_finite_loss, truncate_unchecked, Decoder, Dense, Mlp, Momentum, Parameterized,
    TrainConfig, TrainReport, TruncationLaw,
};
use crate::error::{dim_check, index_check, Error, Result};
use crate::persist;
use crate::tensor::{RandomSource, Vector};

const LOGVAR_CLAMP: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VaeConfig {
    pub latent_dim: usize,
    pub hidden: usize,
    pub lambda_reg: f64,
    pub lambda_drop: f64,
    /// Success parameter of the truncation law over `latent_dim` coordinates.
    pub p: f64,
    pub train: TrainConfig,
}

impl Default for VaeConfig {
    fn default() -> Self {
        Self {
            latent_dim: 8,
            hidden: 64,
            lambda_reg: 1e-2,
            lambda_drop: 0.1,
            p: 0.1,
            train: TrainConfig::default(),
        }
    }
}

impl VaeConfig {
    pub fn law(&self) -> Result<TruncationLaw> {
        TruncationLaw::new(self.latent_dim, self.p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::Config("hidden width must be at least 1".into()));
        }
        for (name, v) in [("lambda_reg", self.lambda_reg), ("lambda_drop", self.lambda_drop)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        self.law()?;
        self.train.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaeLossParts {
    pub total: f64,
    pub rec: f64,
    pub reg: f64,
    pub drop: f64,
}

/// Gaussian-encoder autoencoder trained with an extra nested-dropout
/// reconstruction term.
#[derive(Debug, Clone, PartialEq)]
pub struct TunableVae {
    trunk: Dense,
    mu_head: Dense,
    logvar_head: Dense,
    decoder: Mlp,
    config: VaeConfig,
}

struct EncodeTrace {
    h: Vector,
    mu: Vector,
    raw_logvar: Vector,
    logvar: Vector,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    model: String,
    input_dim: usize,
    config: VaeConfig,
}

impl TunableVae {
    pub fn init(rng: &mut RandomSource, input_dim: usize, config: &VaeConfig) -> Self {
        let (n, h, d) = (input_dim, config.hidden, config.latent_dim);
        let trunk = Dense::init(rng, n, h);
        let mu_head = Dense::init(rng, h, d);
        let logvar_head = Dense::init(rng, h, d);
        let decoder = Mlp::init(rng, &[d, h, n]);
        Self {
            trunk,
            mu_head,
            logvar_head,
            decoder,
            config: config.clone(),
        }
    }

    pub fn config(&self) -> &VaeConfig {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.trunk.fan_in()
    }

    fn encode_trace(&self, x: &Vector) -> EncodeTrace {
        let h = self.trunk.forward(x).map(f64::tanh);
        let mu = self.mu_head.forward(&h);
        let raw_logvar = self.logvar_head.forward(&h);
        let logvar = raw_logvar.map(|v| v.clamp(-LOGVAR_CLAMP, LOGVAR_CLAMP));
        EncodeTrace {
            h,
            mu,
            raw_logvar,
            logvar,
        }
    }

    /// Mean and clamped log-variance of the encoder.
    pub fn encode(&self, x: &Vector) -> Result<(Vector, Vector)> {
        dim_check("signal length", self.input_dim(), x.len())?;
        let t = self.encode_trace(x);
        Ok((t.mu, t.logvar))
    }

    pub fn encode_mean(&self, x: &Vector) -> Result<Vector> {
        Ok(self.encode(x)?.0)
    }

    /// Loss for a fixed reparameterisation noise `eps`.
    pub fn loss_with(&self, x: &Vector, k: usize, eps: &Vector) -> VaeLossParts {
        self.loss_and_grad(x, k, eps, None)
    }

    /// Loss and (optionally) accumulated parameter gradient for a fixed
    /// reparameterisation noise. Gradient layout: trunk, mean head,
    /// log-variance head, decoder.
    pub fn loss_and_grad(&self, x: &Vector, k: usize, eps: &Vector, grad: Option<&mut [f64]>) -> VaeLossParts {
        let (lr, ld) = (self.config.lambda_reg, self.config.lambda_drop);
        let enc = self.encode_trace(x);
        let std = enc.logvar.map(|v| (0.5 * v).exp());
        let z = enc.mu.add(&eps.hadamard(&std));
        let zk = truncate_unchecked(&z, k);

        let full = self.decoder.trace(&z);
        let cut = self.decoder.trace(&zk);
        let rec = full.output.dist_sq(x);
        let drop = cut.output.dist_sq(x);
        let reg = 0.5
            * enc
                .mu
                .iter()
                .zip(&enc.logvar)
                .map(|(m, lv)| m * m + lv.exp() - 1.0 - lv)
                .sum::<f64>();
        let parts = VaeLossParts {
            total: rec + lr * reg + ld * drop,
            rec,
            reg,
            drop,
        };
        let Some(grad) = grad else {
            return parts;
        };

        let sizes = [
            self.trunk.num_params(),
            self.mu_head.num_params(),
            self.logvar_head.num_params(),
        ];
        let (g_trunk, rest) = grad.split_at_mut(sizes[0]);
        let (g_mu_head, rest) = rest.split_at_mut(sizes[1]);
        let (g_lv_head, g_dec) = rest.split_at_mut(sizes[2]);

        let gz_rec = self.decoder.backward(&full, &full.output.sub(x).scale(2.0), g_dec);
        let gzk = self.decoder.backward(&cut, &cut.output.sub(x).scale(2.0 * ld), g_dec);
        let gz = gz_rec.add(&truncate_unchecked(&gzk, k));

        let g_mu = gz.add(&enc.mu.scale(lr));
        let g_raw: Vector = (0..z.len())
            .map(|i| {
                if enc.raw_logvar[i].abs() > LOGVAR_CLAMP {
                    return 0.0;
                }
                gz[i] * eps[i] * 0.5 * std[i] + lr * 0.5 * (enc.logvar[i].exp() - 1.0)
            })
            .collect();
        let mut gh = self.mu_head.backward(&enc.h, &g_mu, g_mu_head);
        gh.axpy(1.0, &self.logvar_head.backward(&enc.h, &g_raw, g_lv_head));
        let g_pre = gh.zip_with(&enc.h, |g, h| g * (1.0 - h * h));
        self.trunk.backward(x, &g_pre, g_trunk);
        parts
    }

    pub fn decode_truncated(&self, z: &Vector, k: usize) -> Result<Vector> {
        dim_check("latent length", self.config.latent_dim, z.len())?;
        index_check(k, self.config.latent_dim)?;
        Ok(self.decoder.forward(&truncate_unchecked(z, k)))
    }

    /// `‖x − D(trunc(μ(x), k))‖²` averaged over `data`.
    pub fn eval_drop_loss(&self, data: &[Vector], k: usize) -> Result<f64> {
        let mut total = 0.0;
        for x in data {
            let mu = self.encode_mean(x)?;
            total += self.decode_truncated(&mu, k)?.dist_sq(x);
        }
        Ok(total / data.len() as f64)
    }

    /// [`eval_drop_loss`](Self::eval_drop_loss) for every `k = 1..=d`.
    pub fn error_profile(&self, data: &[Vector]) -> Result<Vec<f64>> {
        (1..=self.config.latent_dim).map(|k| self.eval_drop_loss(data, k)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|v| v.is_finite())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        persist::write_manifest(
            dir,
            &Manifest {
                model: "tunable_vae".into(),
                input_dim: self.input_dim(),
                config: self.config.clone(),
            },
        )?;
        persist::write_dense(dir, "trunk", &self.trunk)?;
        persist::write_dense(dir, "mu_head", &self.mu_head)?;
        persist::write_dense(dir, "logvar_head", &self.logvar_head)?;
        for (i, l) in self.decoder.layers.iter().enumerate() {
            persist::write_dense(dir, &format!("decoder{i}"), l)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let m: Manifest = persist::read_manifest(dir)?;
        if m.model != "tunable_vae" {
            return Err(Error::Config(format!("{} holds a {} model", dir.display(), m.model)));
        }
        m.config.validate()?;
        let (n, h, d) = (m.input_dim, m.config.hidden, m.config.latent_dim);
        let model = Self {
            trunk: persist::read_dense(dir, "trunk", n, h)?,
            mu_head: persist::read_dense(dir, "mu_head", h, d)?,
            logvar_head: persist::read_dense(dir, "logvar_head", h, d)?,
            decoder: Mlp {
                layers: vec![
                    persist::read_dense(dir, "decoder0", d, h)?,
                    persist::read_dense(dir, "decoder1", h, n)?,
                ],
            },
            config: m.config,
        };
        if !model.is_finite() {
            return Err(Error::Format("stored VAE weights are not finite".into()));
        }
        Ok(model)
    }
}

impl Parameterized for TunableVae {
    fn num_params(&self) -> usize {
        self.trunk.num_params() + self.mu_head.num_params() + self.logvar_head.num_params() + self.decoder.num_params()
    }

    fn params(&self) -> Vec<f64> {
        let mut p = self.trunk.params();
        p.extend(self.mu_head.params());
        p.extend(self.logvar_head.params());
        p.extend(self.decoder.params());
        p
    }

    fn set_params(&mut self, p: &[f64]) {
        let mut at = 0;
        for layer in [&mut self.trunk, &mut self.mu_head, &mut self.logvar_head] {
            let len = layer.num_params();
            layer.set_params(&p[at..at + len]);
            at += len;
        }
        self.decoder.set_params(&p[at..]);
    }
}

impl Decoder for TunableVae {
    fn latent_dim(&self) -> usize {
        self.config.latent_dim
    }

    fn output_dim(&self) -> usize {
        self.decoder.output_dim()
    }

    fn decode(&self, z: &Vector) -> Vector {
        self.decoder.forward(z)
    }

    fn pullback(&self, z: &Vector, grad_out: &Vector) -> Vector {
        self.decoder.pullback(z, grad_out)
    }
}

/// Draws the reparameterisation noise from `rng` and evaluates the loss.
pub fn vae_loss(m: &TunableVae, x: &Vector, k: usize, rng: &mut RandomSource) -> Result<VaeLossParts> {
    dim_check("signal length", m.input_dim(), x.len())?;
    index_check(k, m.config.latent_dim)?;
    let eps = rng.normal_vec(m.config.latent_dim);
    Ok(m.loss_with(x, k, &eps))
}

pub fn vae_decode_truncated(m: &TunableVae, z: &Vector, k: usize) -> Result<Vector> {
    m.decode_truncated(z, k)
}

/// Minibatch gradient descent on the VAE loss. For each example the draw
/// order is: example index, truncation index `k`, reparameterisation noise.
pub fn vae_train(data: &[Vector], config: &VaeConfig) -> Result<(TunableVae, TrainReport)> {
    let n = check_dataset(data)?;
    config.validate()?;
    let law = config.law()?;
    let tc = &config.train;
    let mut rng = RandomSource::new(tc.seed, 0xAE);
    let mut model = TunableVae::init(&mut rng, n, config);
    let mut params = model.params();
    let mut opt = Momentum::new(params.len(), tc.step_size, tc.momentum);
    let mut trace = Vec::with_capacity(tc.steps);
    let d = config.latent_dim;
    for step in 0..tc.steps {
        let mut grad = vec![0.0; params.len()];
        let mut loss = 0.0;
        for _ in 0..tc.batch_size {
            let x = &data[rng.below(data.len() as u64) as usize];
            let k = law.sample(&mut rng);
            let eps = rng.normal_vec(d);
            loss += model.loss_and_grad(x, k, &eps, Some(&mut grad)).total;
        }
        let scale = 1.0 / tc.batch_size as f64;
        loss *= scale;
        check_finite_loss(step, loss)?;
        grad.iter_mut().for_each(|g| *g *= scale);
        trace.push(loss);
        opt.step(&mut params, &grad);
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::TrainingDiverged { step, loss });
        }
        model.set_params(&params);
    }
    Ok((model, TrainReport { loss_trace: trace }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::nn::testing::{finite_diff, max_rel_err};

    fn small_config(d: usize, lr: f64, ld: f64) -> VaeConfig {
        VaeConfig {
            latent_dim: d,
            hidden: 5,
            lambda_reg: lr,
            lambda_drop: ld,
            p: 0.3,
            train: TrainConfig::default(),
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..20u64 {
            let mut rng = RandomSource::new(seed, 9);
            let n = 2 + seed as usize % 7;
            let d = 1 + seed as usize % 4;
            let cfg = small_config(d, 0.7, 0.4);
            let m = TunableVae::init(&mut rng, n, &cfg);
            let x = rng.normal_vec(n);
            let eps = rng.normal_vec(d);
            let k = 1 + seed as usize % d;
            let mut g = vec![0.0; m.num_params()];
            m.loss_and_grad(&x, k, &eps, Some(&mut g));
            let fd = finite_diff(&m.params(), 1e-5, |p| {
                let mut mm = m.clone();
                mm.set_params(p);
                mm.loss_with(&x, k, &eps).total
            });
            assert!(max_rel_err(&g, &fd, 1e-6) < 1e-4, "seed {seed}");
        }
    }

    #[test]
    fn full_truncation_makes_drop_equal_rec() {
        let mut rng = RandomSource::from_seed(1);
        let m = TunableVae::init(&mut rng, 6, &small_config(3, 0.1, 0.1));
        let x = rng.normal_vec(6);
        let mut r1 = RandomSource::from_seed(7);
        let parts = vae_loss(&m, &x, 3, &mut r1).unwrap();
        assert_eq!(parts.drop, parts.rec);
    }

    #[test]
    fn standard_posterior_has_zero_reg() {
        let mut rng = RandomSource::from_seed(2);
        let mut m = TunableVae::init(&mut rng, 4, &small_config(2, 1.0, 0.0));
        // Zero the heads so μ = 0 and log σ² = 0.
        let zeros = vec![0.0; m.mu_head.num_params()];
        m.mu_head.set_params(&zeros);
        m.logvar_head.set_params(&zeros);
        let parts = m.loss_with(&rng.normal_vec(4), 1, &rng.normal_vec(2));
        assert_eq!(parts.reg, 0.0);
    }

    #[test]
    fn perfect_autoencoder_has_zero_loss() {
        // n = d = 1: encoder outputs μ = 0 with σ ≈ 0, decoder outputs x.
        let mut rng = RandomSource::from_seed(3);
        let mut m = TunableVae::init(&mut rng, 1, &small_config(1, 0.0, 0.0));
        let zeros_h = vec![0.0; m.mu_head.num_params()];
        m.mu_head.set_params(&zeros_h);
        m.logvar_head.set_params(&zeros_h);
        m.logvar_head.b = vec![-10.0].into();
        let x: Vector = vec![0.37].into();
        m.decoder.layers[1].w.as_mut_slice().iter_mut().for_each(|w| *w = 0.0);
        m.decoder.layers[1].b = x.clone();
        let parts = m.loss_with(&x, 1, &vec![0.5].into());
        assert_eq!(parts.total, 0.0);
        assert_eq!(parts.rec, 0.0);
    }

    #[test]
    fn decode_truncated_contract() {
        let mut rng = RandomSource::from_seed(4);
        let m = TunableVae::init(&mut rng, 5, &small_config(3, 0.1, 0.1));
        let z = rng.normal_vec(3);
        assert_eq!(vae_decode_truncated(&m, &z, 3).unwrap(), m.decode(&z));
        assert!(vae_decode_truncated(&m, &Vector::zeros(3), 1).unwrap().is_finite());
        assert!(matches!(
            vae_decode_truncated(&m, &Vector::zeros(2), 1),
            Err(Error::InvalidDimension(_))
        ));
        assert!(matches!(vae_decode_truncated(&m, &z, 0), Err(Error::InvalidIndex { .. })));
    }

    fn toy_data(count: usize, seed: u64) -> Vec<Vector> {
        let mut rng = RandomSource::from_seed(seed);
        (0..count)
            .map(|_| {
                let a = rng.normal();
                let b = 0.3 * rng.normal();
                vec![a + b, a - b, 0.5 * a, b].into()
            })
            .collect()
    }

    #[test]
    fn zero_step_size_keeps_weights_and_training_is_deterministic() {
        let data = toy_data(40, 5);
        let mut cfg = small_config(2, 0.01, 0.1);
        cfg.train = TrainConfig {
            steps: 10,
            step_size: 0.0,
            batch_size: 4,
            ..TrainConfig::default()
        };
        let (m, _) = vae_train(&data, &cfg).unwrap();
        let mut rng = RandomSource::new(cfg.train.seed, 0xAE);
        assert_eq!(m, TunableVae::init(&mut rng, 4, &cfg));

        cfg.train.step_size = 1e-2;
        let (a, ta) = vae_train(&data, &cfg).unwrap();
        let (b, tb) = vae_train(&data, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
    }

    #[test]
    fn divergence_reports_step() {
        let data: Vec<Vector> = (0..4).map(|i| vec![1e200 * (i as f64 + 1.0); 3].into()).collect();
        let mut cfg = small_config(2, 0.0, 0.0);
        cfg.train.steps = 5;
        match vae_train(&data, &cfg) {
            Err(Error::TrainingDiverged { step, .. }) => assert_eq!(step, 0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn save_load() {
        let mut rng = RandomSource::from_seed(6);
        let m = TunableVae::init(&mut rng, 5, &small_config(3, 0.1, 0.2));
        let dir = tempfile::tempdir().unwrap();
        m.save(dir.path()).unwrap();
        assert_eq!(TunableVae::load(dir.path()).unwrap(), m);
    }
}
