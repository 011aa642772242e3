use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use super::config::{
    load_config, AutoencoderKind, InvertConfig, PlotConfig, SweepConfig, SweepTask, TheoryConfig, TrainAeConfig,
    TrainLdmConfig,
};
use super::csv::{parse_records, records_to_csv, select_k, summarize, Metric};
use super::recipes::{invert_once, loss_csv, sweep_records, theory_csv, train_autoencoder, train_denoiser};
use super::svg::render_chart;
use crate::diffusion::save_denoiser;
use crate::error::{Error, Result};
use crate::inversion::Guidance;

#[derive(Parser, Debug)]
#[command(name = "tunable", version, about = "Tunable-complexity generative priors for inverse problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form denoising risk per k, with a Monte-Carlo check.
    Theory(TheoryArgs),
    /// Train an ordered autoencoder (linear or VAE) into a model directory.
    TrainVae(TrainVaeArgs),
    /// Train a latent noise predictor into a model directory.
    TrainLdm(TrainLdmArgs),
    /// One posterior-sampling reconstruction.
    Invert(InvertArgs),
    /// Reconstruction error over a list of k, one CSV row per run.
    Sweep(SweepArgs),
    /// SVG chart of a metric against k from sweep CSV.
    Plotdata(PlotArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (directory for training commands); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn tag<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Args, Debug)]
struct TheoryArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',')]
    spectrum: Option<Vec<f64>>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args, Debug)]
struct TrainVaeArgs {
    #[command(flatten)]
    common: Common,
    /// `ordered_linear` or `vae`.
    #[arg(long, value_parser = tag::<AutoencoderKind>)]
    model: Option<AutoencoderKind>,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    step_size: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Args, Debug)]
struct TrainLdmArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    autoencoder: Option<PathBuf>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    step_size: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    lambda_mix: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Args, Debug)]
struct InvertArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    autoencoder: Option<PathBuf>,
    #[arg(long)]
    denoiser: Option<PathBuf>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    signal: Option<usize>,
    /// `quadratic_prox` or `gradient`.
    #[arg(long, value_parser = tag::<Guidance>)]
    guidance: Option<Guidance>,
    #[arg(long)]
    zeta: Option<f64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// `linear_theory`, `latent_map` or `posterior`.
    #[arg(long, value_parser = tag::<SweepTask>)]
    task: Option<SweepTask>,
    #[arg(long)]
    autoencoder: Option<PathBuf>,
    #[arg(long)]
    denoiser: Option<PathBuf>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    k_values: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    peak: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Run trials on one thread.
    #[arg(long)]
    serial: bool,
}

#[derive(Args, Debug)]
struct PlotArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    input: Option<PathBuf>,
    /// `mse`, `psnr_db` or `residual`.
    #[arg(long)]
    metric: Option<String>,
}

fn base<T: DeserializeOwned + Default>(common: &Common) -> Result<T> {
    match &common.config {
        Some(p) => load_config(p),
        None => Ok(T::default()),
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn out_dir(common: &Common) -> Result<&Path> {
    common
        .out
        .as_deref()
        .ok_or_else(|| Error::Config("--out <dir> is required for training".into()))
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Theory(a) => {
            let mut cfg: TheoryConfig = base(&a.common)?;
            set(&mut cfg.spectrum, a.spectrum);
            set(&mut cfg.sigma, a.sigma);
            set(&mut cfg.gamma, a.gamma);
            set(&mut cfg.trials, a.trials);
            set(&mut cfg.seed, a.common.seed);
            emit(&a.common.out, &theory_csv(&cfg)?)
        }
        Command::TrainVae(a) => {
            let mut cfg: TrainAeConfig = base(&a.common)?;
            set(&mut cfg.model, a.model);
            set(&mut cfg.vae.latent_dim, a.latent_dim);
            set(&mut cfg.vae.p, a.p);
            set(&mut cfg.vae.train.steps, a.steps);
            set(&mut cfg.vae.train.step_size, a.step_size);
            set(&mut cfg.data.count, a.count);
            set(&mut cfg.vae.train.seed, a.common.seed);
            let dir = out_dir(&a.common)?;
            let (model, report) = train_autoencoder(&cfg)?;
            model.save(dir, &cfg.vae)?;
            fs::write(dir.join("loss.csv"), loss_csv(&report))?;
            Ok(())
        }
        Command::TrainLdm(a) => {
            let mut cfg: TrainLdmConfig = base(&a.common)?;
            if a.autoencoder.is_some() {
                cfg.autoencoder = a.autoencoder;
            }
            set(&mut cfg.ldm.train.steps, a.steps);
            set(&mut cfg.ldm.train.step_size, a.step_size);
            set(&mut cfg.ldm.hidden, a.hidden);
            set(&mut cfg.ldm.lambda_mix, a.lambda_mix);
            set(&mut cfg.data.count, a.count);
            set(&mut cfg.ldm.train.seed, a.common.seed);
            let dir = out_dir(&a.common)?;
            let (net, report) = train_denoiser(&cfg)?;
            save_denoiser(&net, &cfg.ldm, dir)?;
            fs::write(dir.join("loss.csv"), loss_csv(&report))?;
            Ok(())
        }
        Command::Invert(a) => {
            let mut cfg: InvertConfig = base(&a.common)?;
            if a.autoencoder.is_some() {
                cfg.autoencoder = a.autoencoder;
            }
            set(&mut cfg.denoiser, a.denoiser);
            set(&mut cfg.sigma, a.sigma);
            if a.k.is_some() {
                cfg.inversion.k = a.k;
            }
            set(&mut cfg.signal, a.signal);
            set(&mut cfg.inversion.guidance, a.guidance);
            set(&mut cfg.inversion.zeta, a.zeta);
            set(&mut cfg.seed, a.common.seed);
            let (record, _) = invert_once(&cfg)?;
            emit(&a.common.out, &records_to_csv(&[record]))
        }
        Command::Sweep(a) => {
            let mut cfg: SweepConfig = base(&a.common)?;
            set(&mut cfg.task, a.task);
            if a.autoencoder.is_some() {
                cfg.autoencoder = a.autoencoder;
            }
            if a.denoiser.is_some() {
                cfg.denoiser = a.denoiser;
            }
            set(&mut cfg.sigma, a.sigma);
            set(&mut cfg.k_values, a.k_values);
            set(&mut cfg.trials, a.trials);
            set(&mut cfg.peak, a.peak);
            set(&mut cfg.map.gamma, a.gamma);
            set(&mut cfg.seed, a.common.seed);
            if a.serial {
                cfg.parallel = false;
            }
            let records = sweep_records(&cfg)?;
            emit(&a.common.out, &records_to_csv(&records))?;
            let summary = summarize(&records, Metric::Mse);
            for (task, k) in select_k(&records) {
                let best = summary.iter().find(|s| s.task == task && s.k == k).map_or(f64::NAN, |s| s.mean);
                eprintln!("{task}: selected k = {k} by lowest mean validation MSE ({best}); perceptual metric not used");
            }
            Ok(())
        }
        Command::Plotdata(a) => {
            let mut cfg: PlotConfig = base(&a.common)?;
            set(&mut cfg.input, a.input);
            set(&mut cfg.metric, a.metric);
            let metric = Metric::parse(&cfg.metric)?;
            let text = fs::read_to_string(&cfg.input)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", cfg.input.display())))?;
            let records = parse_records(&text)?;
            emit(&a.common.out, &render_chart(&records, metric)?)
        }
    }
}

/// Parses `argv` (program name first) and runs the subcommand. Returns 0 on
/// success, 1 for usage or configuration errors and 2 for numerical
/// failures.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}
