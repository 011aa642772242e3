//! The work behind each subcommand, as plain functions of a config.

use std::sync::Arc;

use super::artifacts::Autoencoder;
use super::config::{AutoencoderKind, InvertConfig, SweepConfig, SweepTask, TheoryConfig, TrainAeConfig, TrainLdmConfig};
use super::csv::theory_to_csv;
use super::metrics::{mse, psnr_from_mse, ExperimentRecord};
use crate::diffusion::{ldm_train, load_denoiser, DenoiserNet, NoisePredictor, NoiseSchedule};
use crate::error::{Error, Result};
use crate::forward::{ForwardOperator, OperatorDescriptor};
use crate::inversion::{
    run_inversion, sweep_k, trial_rng, InversionConfig, LatentMapSweep, LinearTheorySweep, PosteriorRun, PosteriorSweep,
    SweepProblem, SweepSettings,
};
use crate::models::{ordered_linear_train, vae_train, Decoder, IdentityDecoder, TrainReport};
use crate::tensor::{RandomSource, Vector};
use crate::theory::{theory_table, DenoiseProblem, GeneratorFamily};

/// Closed-form risk table with Monte-Carlo check, as CSV.
pub fn theory_csv(cfg: &TheoryConfig) -> Result<String> {
    let spectrum: Vector = cfg.spectrum.clone().into();
    let mut rng = RandomSource::new(cfg.seed, 0x7E0);
    let family = GeneratorFamily::random(&mut rng, &spectrum)?;
    let problem = DenoiseProblem::new(family, cfg.sigma, cfg.gamma)?;
    let (rows, opt) = theory_table(&problem, cfg.trials, cfg.seed)?;
    Ok(theory_to_csv(&rows, &opt))
}

pub fn train_autoencoder(cfg: &TrainAeConfig) -> Result<(Autoencoder, TrainReport)> {
    let data = cfg.data.train()?;
    match cfg.model {
        AutoencoderKind::OrderedLinear => {
            let law = cfg.vae.law()?;
            let (m, r) = ordered_linear_train(&data, cfg.vae.latent_dim, &law, &cfg.vae.train)?;
            Ok((Autoencoder::Linear(m), r))
        }
        AutoencoderKind::Vae => {
            let (m, r) = vae_train(&data, &cfg.vae)?;
            Ok((Autoencoder::Vae(Box::new(m)), r))
        }
    }
}

/// Trains on encoder latents when an autoencoder is given, else on signals.
pub fn train_denoiser(cfg: &TrainLdmConfig) -> Result<(DenoiserNet, TrainReport)> {
    let data = cfg.data.train()?;
    let latents = match &cfg.autoencoder {
        Some(dir) => {
            let ae = Autoencoder::load(dir)?;
            data.iter().map(|x| ae.encode(x)).collect::<Result<Vec<_>>>()?
        }
        None => data,
    };
    ldm_train(&latents, &cfg.ldm)
}

/// `step,loss` rows.
pub fn loss_csv(report: &TrainReport) -> String {
    let mut out = String::from("step,loss\n");
    for (i, l) in report.loss_trace.iter().enumerate() {
        out.push_str(&format!("{i},{l}\n"));
    }
    out
}

fn operator(desc: &Option<OperatorDescriptor>, n: usize) -> Result<Arc<ForwardOperator>> {
    let d = desc.clone().unwrap_or_else(|| OperatorDescriptor::identity(n));
    Ok(Arc::new(d.build()?))
}

/// One posterior-sampling run on held-out signal `cfg.signal`.
pub fn invert_once(cfg: &InvertConfig) -> Result<(ExperimentRecord, PosteriorRun)> {
    let (net, ldm) = load_denoiser(&cfg.denoiser)?;
    let schedule = ldm.schedule.build()?;
    let signals = cfg.data.heldout()?;
    let truth = signals.get(cfg.signal).cloned().ok_or_else(|| {
        Error::InvalidArgument(format!("signal {} out of range ({} held-out)", cfg.signal, signals.len()))
    })?;
    let op = operator(&cfg.operator, cfg.data.n)?;
    let mut rng = trial_rng(cfg.seed, 0);
    let m = op.measure(&truth, cfg.sigma, &mut rng)?;
    let run = match &cfg.autoencoder {
        Some(dir) => run_inversion(&m, &Autoencoder::load(dir)?, &net, &schedule, &cfg.inversion, &mut rng)?,
        None => run_inversion(&m, &IdentityDecoder(cfg.data.n), &net, &schedule, &cfg.inversion, &mut rng)?,
    };
    let err = mse(&run.x, &truth)?;
    let record = ExperimentRecord {
        task: "invert".into(),
        k: cfg.inversion.k.unwrap_or(net.latent_dim()),
        seed: cfg.seed,
        trial: cfg.signal,
        mse: err,
        psnr_db: psnr_from_mse(err, cfg.peak).db,
        residual: run.final_residual,
        wall_ms: 0.0,
    };
    Ok((record, run))
}

fn k_list(cfg: &SweepConfig, max: usize) -> Vec<usize> {
    if cfg.k_values.is_empty() {
        (1..=max).collect()
    } else {
        cfg.k_values.clone()
    }
}

fn run_problem(problem: &impl SweepProblem, cfg: &SweepConfig) -> Result<Vec<ExperimentRecord>> {
    let settings = SweepSettings {
        trials: cfg.trials,
        seed: cfg.seed,
        peak: cfg.peak,
        parallel: cfg.parallel,
        timing: false,
    };
    sweep_k(problem, &k_list(cfg, problem.max_k()), &settings)
}

#[allow(clippy::too_many_arguments)]
fn posterior_sweep<D: Decoder, P: NoisePredictor>(
    decoder: D,
    net: P,
    schedule: NoiseSchedule,
    inversion: InversionConfig,
    operator: Arc<ForwardOperator>,
    signals: Vec<Vector>,
    cfg: &SweepConfig,
) -> Result<Vec<ExperimentRecord>> {
    let problem = PosteriorSweep {
        decoder,
        net,
        schedule,
        config: inversion,
        operator,
        sigma: cfg.sigma,
        signals,
        task: "posterior".into(),
    };
    run_problem(&problem, cfg)
}

/// Every `(k, trial)` record of the configured sweep.
pub fn sweep_records(cfg: &SweepConfig) -> Result<Vec<ExperimentRecord>> {
    let need = |p: &Option<std::path::PathBuf>, what: &str| {
        p.clone()
            .ok_or_else(|| Error::Config(format!("sweep task needs `{what}`")))
    };
    match cfg.task {
        SweepTask::LinearTheory => {
            let family = cfg.data.source()?.family().clone();
            let problem = LinearTheorySweep {
                problem: DenoiseProblem::new(family, cfg.sigma, cfg.map.gamma)?,
            };
            run_problem(&problem, cfg)
        }
        SweepTask::LatentMap => {
            let ae = Autoencoder::load(&need(&cfg.autoencoder, "autoencoder")?)?;
            let problem = LatentMapSweep {
                decoder: ae,
                operator: operator(&cfg.operator, cfg.data.n)?,
                sigma: cfg.sigma,
                map: cfg.map.clone(),
                signals: cfg.data.heldout()?,
                task: "latent_map".into(),
            };
            run_problem(&problem, cfg)
        }
        SweepTask::Posterior => {
            let (net, ldm) = load_denoiser(&need(&cfg.denoiser, "denoiser")?)?;
            let schedule = ldm.schedule.build()?;
            let op = operator(&cfg.operator, cfg.data.n)?;
            let signals = cfg.data.heldout()?;
            let inv = cfg.inversion.clone();
            match &cfg.autoencoder {
                Some(dir) => posterior_sweep(Autoencoder::load(dir)?, net, schedule, inv, op, signals, cfg),
                None => posterior_sweep(IdentityDecoder(cfg.data.n), net, schedule, inv, op, signals, cfg),
            }
        }
    }
}
