use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_finite_loss, Decoder, Momentum, TrainConfig, TrainReport, TruncationLaw};
use crate::error::{dim_check, index_check, Error, Result};
use crate::persist;
use crate::tensor::{Matrix, RandomSource, Vector};

/// Tied-weight linear autoencoder: encoder `Wᵀ`, decoder `W` (`n × d`).
///
/// Nested-dropout training minimises `E_k ‖x − W·trunc(Wᵀx, k)‖²`, where the
/// expectation over `k` is evaluated exactly from the law's pmf rather than
/// sampled, so each step is a deterministic function of the minibatch.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedLinearAutoencoder {
    w: Matrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    model: String,
    input_dim: usize,
    latent_dim: usize,
    law: TruncationLaw,
    train: TrainConfig,
}

impl OrderedLinearAutoencoder {
    pub fn init(rng: &mut RandomSource, n: usize, d: usize) -> Self {
        let std = 1.0 / (d as f64).sqrt();
        Self {
            w: Matrix::from_fn(n, d, |_, _| std * rng.normal()),
        }
    }

    pub fn from_decoder(w: Matrix) -> Result<Self> {
        if !w.is_finite() {
            return Err(Error::InvalidValue("decoder weights must be finite".into()));
        }
        Ok(Self { w })
    }

    pub fn decoder_matrix(&self) -> &Matrix {
        &self.w
    }

    pub fn input_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn encode(&self, x: &Vector) -> Vector {
        self.w.mul_t_vec(x)
    }

    /// `‖x − W·trunc(Wᵀx, k)‖²`
    pub fn reconstruction_error(&self, x: &Vector, k: usize) -> Result<f64> {
        index_check(k, self.w.cols())?;
        dim_check("signal length", self.w.rows(), x.len())?;
        let mut c = self.encode(x);
        for v in &mut c.as_mut_slice()[k..] {
            *v = 0.0;
        }
        Ok(self.w.mul_vec(&c).dist_sq(x))
    }

    /// Mean reconstruction error over `data` for every `k = 1..=d`.
    pub fn error_profile(&self, data: &[Vector]) -> Result<Vec<f64>> {
        (1..=self.w.cols())
            .map(|k| {
                let total = data
                    .iter()
                    .map(|x| self.reconstruction_error(x, k))
                    .sum::<Result<f64>>()?;
                Ok(total / data.len() as f64)
            })
            .collect()
    }

    /// Expected nested-dropout loss for one example and its gradient with
    /// respect to `W` (row-major).
    ///
    /// With `c = Wᵀx`, `r_k = x − Σ_{j≤k} c_j w_j` and `R_j = Σ_{k≥j} P(k) r_k`,
    /// the gradient of column `j` is `−2(c_j R_j + (w_jᵀR_j) x)`.
    pub fn expected_loss_and_grad(&self, x: &Vector, law: &TruncationLaw) -> (f64, Vec<f64>) {
        let (n, d) = (self.w.rows(), self.w.cols());
        let c = self.encode(x);
        let mut residuals = Vec::with_capacity(d);
        let mut r = x.clone();
        let mut loss = 0.0;
        for j in 0..d {
            for i in 0..n {
                r[i] -= c[j] * self.w[(i, j)];
            }
            loss += law.pmf(j + 1) * r.norm_sq();
            residuals.push(r.clone());
        }
        let mut grad = vec![0.0; n * d];
        let mut suffix = Vector::zeros(n);
        for j in (0..d).rev() {
            suffix.axpy(law.pmf(j + 1), &residuals[j]);
            let wj_dot: f64 = (0..n).map(|i| self.w[(i, j)] * suffix[i]).sum();
            for i in 0..n {
                grad[i * d + j] = -2.0 * (c[j] * suffix[i] + wj_dot * x[i]);
            }
        }
        (loss, grad)
    }

    pub fn expected_loss(&self, x: &Vector, law: &TruncationLaw) -> f64 {
        self.expected_loss_and_grad(x, law).0
    }

    pub fn save(&self, dir: &Path, law: &TruncationLaw, train: &TrainConfig) -> Result<()> {
        persist::write_manifest(
            dir,
            &Manifest {
                model: "ordered_linear_autoencoder".into(),
                input_dim: self.w.rows(),
                latent_dim: self.w.cols(),
                law: *law,
                train: train.clone(),
            },
        )?;
        persist::write_matrix(dir, "decoder", &self.w)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let m: Manifest = persist::read_manifest(dir)?;
        if m.model != "ordered_linear_autoencoder" {
            return Err(Error::Config(format!("{} holds a {} model", dir.display(), m.model)));
        }
        Self::from_decoder(persist::read_matrix(dir, "decoder", m.input_dim, m.latent_dim)?)
    }
}

impl Decoder for OrderedLinearAutoencoder {
    fn latent_dim(&self) -> usize {
        self.w.cols()
    }

    fn output_dim(&self) -> usize {
        self.w.rows()
    }

    fn decode(&self, z: &Vector) -> Vector {
        self.w.mul_vec(z)
    }

    fn pullback(&self, _z: &Vector, grad_out: &Vector) -> Vector {
        self.w.mul_t_vec(grad_out)
    }
}

/// Trains a tied-weight ordered autoencoder by minibatch gradient descent.
pub fn ordered_linear_train(
    data: &[Vector],
    d: usize,
    law: &TruncationLaw,
    config: &TrainConfig,
) -> Result<(OrderedLinearAutoencoder, TrainReport)> {
    let n = super::check_dataset(data)?;
    if d == 0 || d > n {
        return Err(Error::InvalidArgument(format!("latent dim {d} must lie in 1..={n}")));
    }
    if law.d != d {
        return Err(Error::InvalidArgument(format!(
            "truncation law is over {} coordinates, model has {d}",
            law.d
        )));
    }
    config.validate()?;
    let mut rng = RandomSource::new(config.seed, 0x11AE);
    let mut model = OrderedLinearAutoencoder::init(&mut rng, n, d);
    let mut opt = Momentum::new(n * d, config.step_size, config.momentum);
    let mut trace = Vec::with_capacity(config.steps);
    for step in 0..config.steps {
        let mut grad = vec![0.0; n * d];
        let mut loss = 0.0;
        for _ in 0..config.batch_size {
            let x = &data[rng.below(data.len() as u64) as usize];
            let (l, g) = model.expected_loss_and_grad(x, law);
            loss += l;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        let scale = 1.0 / config.batch_size as f64;
        loss *= scale;
        grad.iter_mut().for_each(|g| *g *= scale);
        check_finite_loss(step, loss)?;
        trace.push(loss);
        opt.step(model.w.as_mut_slice(), &grad);
    }
    if !model.w.is_finite() {
        return Err(Error::TrainingDiverged {
            step: config.steps,
            loss: f64::NAN,
        });
    }
    Ok((model, TrainReport { loss_trace: trace }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::nn::testing::{finite_diff, max_rel_err};

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..20u64 {
            let mut rng = RandomSource::new(seed, 3);
            let (n, d) = (2 + (seed as usize % 7), 1 + (seed as usize % 4));
            let d = d.min(n);
            let model = OrderedLinearAutoencoder::init(&mut rng, n, d);
            let law = TruncationLaw::new(d, 0.4).unwrap();
            let x = rng.normal_vec(n);
            let (_, g) = model.expected_loss_and_grad(&x, &law);
            let fd = finite_diff(model.w.as_slice(), 1e-5, |p| {
                let m = OrderedLinearAutoencoder::from_decoder(Matrix::new(n, d, p.to_vec()).unwrap()).unwrap();
                m.expected_loss(&x, &law)
            });
            assert!(max_rel_err(&g, &fd, 1e-6) < 1e-4, "seed {seed}");
        }
    }

    #[test]
    fn expected_loss_matches_pmf_weighted_errors() {
        let mut rng = RandomSource::from_seed(4);
        let model = OrderedLinearAutoencoder::init(&mut rng, 5, 3);
        let law = TruncationLaw::new(3, 0.3).unwrap();
        let x = rng.normal_vec(5);
        let direct: f64 = (1..=3).map(|k| law.pmf(k) * model.reconstruction_error(&x, k).unwrap()).sum();
        assert!((model.expected_loss(&x, &law) - direct).abs() < 1e-12);
    }

    fn toy_data(count: usize, seed: u64) -> Vec<Vector> {
        let sd = [2.0, 1.0, 0.5, 0.25];
        let mut rng = RandomSource::from_seed(seed);
        (0..count)
            .map(|_| sd.iter().map(|s| s * rng.normal()).collect())
            .collect()
    }

    #[test]
    fn zero_step_keeps_initialisation() {
        let data = toy_data(50, 1);
        let law = TruncationLaw::new(2, 0.5).unwrap();
        let cfg = TrainConfig {
            steps: 5,
            step_size: 0.0,
            ..TrainConfig::default()
        };
        let (model, _) = ordered_linear_train(&data, 2, &law, &cfg).unwrap();
        let mut rng = RandomSource::new(cfg.seed, 0x11AE);
        assert_eq!(model, OrderedLinearAutoencoder::init(&mut rng, 4, 2));
    }

    #[test]
    fn degenerate_law_trains_first_column_only() {
        let data = toy_data(100, 2);
        let law = TruncationLaw::new(3, 1.0).unwrap();
        let cfg = TrainConfig {
            steps: 50,
            step_size: 0.01,
            ..TrainConfig::default()
        };
        let (model, _) = ordered_linear_train(&data, 3, &law, &cfg).unwrap();
        let mut rng = RandomSource::new(cfg.seed, 0x11AE);
        let init = OrderedLinearAutoencoder::init(&mut rng, 4, 3);
        for i in 0..4 {
            assert_ne!(model.w[(i, 0)], init.w[(i, 0)]);
            for j in 1..3 {
                assert_eq!(model.w[(i, j)], init.w[(i, j)]);
            }
        }
    }

    #[test]
    fn invalid_inputs() {
        let data = toy_data(10, 3);
        let law = TruncationLaw::new(5, 0.5).unwrap();
        assert!(ordered_linear_train(&data, 5, &law, &TrainConfig::default()).is_err());
        assert!(ordered_linear_train(&[], 1, &law, &TrainConfig::default()).is_err());
    }

    #[test]
    fn save_load() {
        let mut rng = RandomSource::from_seed(5);
        let model = OrderedLinearAutoencoder::init(&mut rng, 6, 3);
        let dir = tempfile::tempdir().unwrap();
        model
            .save(dir.path(), &TruncationLaw::new(3, 0.2).unwrap(), &TrainConfig::default())
            .unwrap();
        assert_eq!(OrderedLinearAutoencoder::load(dir.path()).unwrap(), model);
    }
}
