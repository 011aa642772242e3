//! Denoising error against the truncation index for a trained ordered
//! linear autoencoder, at a high and a low noise level.
//!
//! Writes `u_shape.csv` and `u_shape.svg` into the current directory.

use std::sync::Arc;

use tunable_prior::forward::ForwardOperator;
use tunable_prior::harness::{records_to_csv, render_chart, select_k, summarize, DataSpec, Metric};
use tunable_prior::inversion::{sweep_k, LatentMapSweep, MapConfig, SweepSettings};
use tunable_prior::models::{ordered_linear_train, TrainConfig, TruncationLaw};
use tunable_prior::theory::{optimal_k, DenoiseProblem};

fn main() -> tunable_prior::Result<()> {
    let data = DataSpec {
        n: 32,
        count: 4000,
        heldout: 20,
        ..DataSpec::default()
    };
    let train = data.train()?;
    let law = TruncationLaw::new(32, 0.05)?;
    let cfg = TrainConfig {
        steps: 20_000,
        batch_size: 32,
        step_size: 0.05,
        ..TrainConfig::default()
    };
    let (model, report) = ordered_linear_train(&train, 32, &law, &cfg)?;
    println!("final smoothed loss {:.5}", report.smoothed(200).last().copied().unwrap_or(f64::NAN));

    let op = Arc::new(ForwardOperator::identity(32));
    let ks: Vec<usize> = (1..=32).collect();
    let mut all = Vec::new();
    for (task, sigma) in [("sigma_0.25", 0.25), ("sigma_0.01", 0.01)] {
        let problem = LatentMapSweep {
            decoder: model.clone(),
            operator: op.clone(),
            sigma,
            map: MapConfig {
                steps: 5000,
                step_size: 0.5,
                tol: 1e-14,
                ..MapConfig::default()
            },
            signals: data.heldout()?,
            task: task.into(),
        };
        let recs = sweep_k(&problem, &ks, &SweepSettings::default())?;
        let theory = optimal_k(&DenoiseProblem::mle(data.source()?.family().clone(), sigma)?);
        println!("{task}: theory k* = {}", theory.k);
        all.extend(recs);
    }
    for s in summarize(&all, Metric::Mse) {
        println!("{} k={:2} mse {:.5} ± {:.5}", s.task, s.k, s.mean, s.std_dev);
    }
    for (task, k) in select_k(&all) {
        println!("{task}: best k = {k}");
    }
    std::fs::write("u_shape.csv", records_to_csv(&all))?;
    std::fs::write("u_shape.svg", render_chart(&all, Metric::Mse)?)?;
    Ok(())
}
