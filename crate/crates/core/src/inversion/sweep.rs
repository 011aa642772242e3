use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{InversionConfig, MapConfig};
use super::map::latent_map_estimate;
use super::posterior::run_inversion;
use crate::diffusion::{NoisePredictor, NoiseSchedule};
use crate::error::{Error, Result};
use crate::forward::ForwardOperator;
use crate::harness::{mse, psnr_from_mse, ExperimentRecord};
use crate::models::Decoder;
use crate::tensor::{RandomSource, Vector};
use crate::theory::{decode_rotated, linear_map_estimate, DenoiseProblem};

/// Ground truth and estimate from one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub truth: Vector,
    pub estimate: Vector,
    /// `‖y − A(x̂)‖`
    pub residual: f64,
}

/// A reconstruction task evaluated at a given truncation index.
///
/// Implementations must draw all trial randomness from the supplied
/// generator, so trials with the same index share truth and noise across
/// `k`.
pub trait SweepProblem: Sync {
    fn task(&self) -> &str;
    fn max_k(&self) -> usize;
    fn run_trial(&self, k: usize, trial: usize, rng: &mut RandomSource) -> Result<TrialOutcome>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub trials: usize,
    pub seed: u64,
    pub peak: f64,
    pub parallel: bool,
    /// Record wall-clock time per run; otherwise `wall_ms` is 0.
    pub timing: bool,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            trials: 20,
            seed: 0,
            peak: 1.0,
            parallel: true,
            timing: false,
        }
    }
}

/// The generator for trial `trial`; independent of `k`.
pub fn trial_rng(seed: u64, trial: usize) -> RandomSource {
    RandomSource::new(seed, 0x5EE9).derive(trial as u64)
}

/// Runs every `(k, trial)` pair and returns records ordered by `k` (as
/// given) and then trial.
pub fn sweep_k(problem: &impl SweepProblem, k_values: &[usize], settings: &SweepSettings) -> Result<Vec<ExperimentRecord>> {
    if k_values.is_empty() {
        return Err(Error::InvalidArgument("k list is empty".into()));
    }
    if settings.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if !(settings.peak > 0.0 && settings.peak.is_finite()) {
        return Err(Error::InvalidArgument(format!("peak must be positive, got {}", settings.peak)));
    }
    for &k in k_values {
        crate::error::index_check(k, problem.max_k())?;
    }
    let jobs: Vec<(usize, usize)> = k_values
        .iter()
        .flat_map(|&k| (0..settings.trials).map(move |t| (k, t)))
        .collect();
    let run = |&(k, trial): &(usize, usize)| -> Result<ExperimentRecord> {
        let started = Instant::now();
        let mut rng = trial_rng(settings.seed, trial);
        let out = problem.run_trial(k, trial, &mut rng).map_err(|e| Error::Trial {
            k,
            trial,
            source: Box::new(e),
        })?;
        let wall_ms = if settings.timing {
            started.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        let err = mse(&out.estimate, &out.truth)?;
        Ok(ExperimentRecord {
            task: problem.task().to_string(),
            k,
            seed: settings.seed,
            trial,
            mse: err,
            psnr_db: psnr_from_mse(err, settings.peak).db,
            residual: out.residual,
            wall_ms,
        })
    };
    if settings.parallel {
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    }
}

/// Denoising with the closed-form truncated estimator of the linear family.
#[derive(Debug, Clone)]
pub struct LinearTheorySweep {
    pub problem: DenoiseProblem,
}

impl SweepProblem for LinearTheorySweep {
    fn task(&self) -> &str {
        "linear_theory"
    }

    fn max_k(&self) -> usize {
        self.problem.dim()
    }

    fn run_trial(&self, k: usize, _trial: usize, rng: &mut RandomSource) -> Result<TrialOutcome> {
        let n = self.problem.dim();
        let z0 = rng.normal_vec(n);
        let truth = decode_rotated(&self.problem.family, &z0);
        let noise = rng.normal_vec(n);
        let y = truth.add(&noise.scale(self.problem.sigma));
        let est = linear_map_estimate(&self.problem, k, &y)?;
        let residual = y.dist_sq(&est.x).sqrt();
        Ok(TrialOutcome {
            truth,
            estimate: est.x,
            residual,
        })
    }
}

/// Latent MAP recovery of held-out signals through a forward operator.
pub struct LatentMapSweep<D> {
    pub decoder: D,
    pub operator: Arc<ForwardOperator>,
    pub sigma: f64,
    /// `k` is overridden per run.
    pub map: MapConfig,
    /// Trial `i` uses `signals[i % len]`.
    pub signals: Vec<Vector>,
    pub task: String,
}

impl<D: Decoder> SweepProblem for LatentMapSweep<D> {
    fn task(&self) -> &str {
        &self.task
    }

    fn max_k(&self) -> usize {
        self.decoder.latent_dim()
    }

    fn run_trial(&self, k: usize, trial: usize, rng: &mut RandomSource) -> Result<TrialOutcome> {
        let truth = pick(&self.signals, trial)?;
        let m = self.operator.measure(&truth, self.sigma, rng)?;
        let cfg = MapConfig { k, ..self.map.clone() };
        let est = latent_map_estimate(&m, &self.decoder, &cfg)?;
        let residual = m.operator.residual_sq(&est.x, &m.y)?.sqrt();
        Ok(TrialOutcome {
            truth,
            estimate: est.x,
            residual,
        })
    }
}

/// Diffusion-prior inversion of held-out signals.
pub struct PosteriorSweep<D, P> {
    pub decoder: D,
    pub net: P,
    pub schedule: NoiseSchedule,
    /// `k` is overridden per run.
    pub config: InversionConfig,
    pub operator: Arc<ForwardOperator>,
    pub sigma: f64,
    pub signals: Vec<Vector>,
    pub task: String,
}

impl<D: Decoder, P: NoisePredictor> SweepProblem for PosteriorSweep<D, P> {
    fn task(&self) -> &str {
        &self.task
    }

    fn max_k(&self) -> usize {
        self.net.latent_dim()
    }

    fn run_trial(&self, k: usize, trial: usize, rng: &mut RandomSource) -> Result<TrialOutcome> {
        let truth = pick(&self.signals, trial)?;
        let m = self.operator.measure(&truth, self.sigma, rng)?;
        let cfg = InversionConfig {
            k: Some(k),
            ..self.config.clone()
        };
        let run = run_inversion(&m, &self.decoder, &self.net, &self.schedule, &cfg, rng)?;
        Ok(TrialOutcome {
            truth,
            estimate: run.x,
            residual: run.final_residual,
        })
    }
}

fn pick(signals: &[Vector], trial: usize) -> Result<Vector> {
    if signals.is_empty() {
        return Err(Error::InvalidArgument("no held-out signals".into()));
    }
    Ok(signals[trial % signals.len()].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::RunningStats;
    use crate::theory::{closed_form_mse, GeneratorFamily};

    fn theory_bundle() -> LinearTheorySweep {
        let mut rng = RandomSource::from_seed(1);
        let fam = GeneratorFamily::random(&mut rng, &vec![2.0, 1.0, 0.6, 0.3, 0.1].into()).unwrap();
        LinearTheorySweep {
            problem: DenoiseProblem::new(fam, 0.5, 0.05).unwrap(),
        }
    }

    #[test]
    fn single_run_single_record() {
        let recs = sweep_k(
            &theory_bundle(),
            &[2],
            &SweepSettings {
                trials: 1,
                ..SweepSettings::default()
            },
        )
        .unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!((recs[0].k, recs[0].trial), (2, 0));
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let b = theory_bundle();
        let par = SweepSettings {
            trials: 7,
            seed: 4,
            ..SweepSettings::default()
        };
        let ser = SweepSettings {
            parallel: false,
            ..par.clone()
        };
        let a = sweep_k(&b, &[3, 1, 5], &par).unwrap();
        assert_eq!(a, sweep_k(&b, &[3, 1, 5], &par).unwrap());
        assert_eq!(a, sweep_k(&b, &[3, 1, 5], &ser).unwrap());
        let order: Vec<(usize, usize)> = a.iter().map(|r| (r.k, r.trial)).collect();
        assert_eq!(order[..3], [(3, 0), (3, 1), (3, 2)]);
        assert_eq!(order[7], (1, 0));
    }

    #[test]
    fn theory_bundle_reproduces_closed_form() {
        let b = theory_bundle();
        let n = b.problem.dim();
        let settings = SweepSettings {
            trials: 20_000,
            seed: 9,
            ..SweepSettings::default()
        };
        let ks: Vec<usize> = (1..=n).collect();
        let recs = sweep_k(&b, &ks, &settings).unwrap();
        for k in ks {
            let stats: RunningStats = recs.iter().filter(|r| r.k == k).map(|r| r.mse * n as f64).collect();
            let target = closed_form_mse(&b.problem, k).unwrap();
            let z = stats.estimate().z_score(target);
            assert!(z.abs() < 4.0, "k={k}: z={z}");
        }
    }

    #[test]
    fn errors_carry_context() {
        struct Failing;
        impl SweepProblem for Failing {
            fn task(&self) -> &str {
                "failing"
            }
            fn max_k(&self) -> usize {
                3
            }
            fn run_trial(&self, k: usize, trial: usize, _: &mut RandomSource) -> Result<TrialOutcome> {
                if k == 2 && trial == 1 {
                    Err(Error::NonFiniteObjective { iteration: 5 })
                } else {
                    Ok(TrialOutcome {
                        truth: Vector::zeros(1),
                        estimate: Vector::zeros(1),
                        residual: 0.0,
                    })
                }
            }
        }
        let err = sweep_k(
            &Failing,
            &[1, 2],
            &SweepSettings {
                trials: 3,
                ..SweepSettings::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Trial { k: 2, trial: 1, .. }));
        assert!(err.is_numerical());
        assert!(sweep_k(&Failing, &[], &SweepSettings::default()).is_err());
        assert!(sweep_k(&Failing, &[4], &SweepSettings::default()).is_err());
    }
}
