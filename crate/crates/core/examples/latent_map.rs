//! Compressed sensing with a trained ordered autoencoder: latent MAP from
//! 12 Gaussian measurements of a 32-dimensional signal, for several k.

use std::sync::Arc;

use tunable_prior::forward::ForwardOperator;
use tunable_prior::harness::{mse, DataSpec};
use tunable_prior::inversion::{latent_map_estimate, MapConfig};
use tunable_prior::models::{ordered_linear_train, TrainConfig, TruncationLaw};
use tunable_prior::tensor::RandomSource;

fn main() -> tunable_prior::Result<()> {
    let data = DataSpec::default();
    let law = TruncationLaw::new(16, 0.1)?;
    let cfg = TrainConfig {
        steps: 8000,
        batch_size: 32,
        step_size: 0.05,
        ..TrainConfig::default()
    };
    let (model, _) = ordered_linear_train(&data.train()?, 16, &law, &cfg)?;
    let op = Arc::new(ForwardOperator::dense_gaussian(12, 32, 4)?);
    let signals = data.heldout()?;
    for k in [1, 2, 4, 6, 8, 12, 16] {
        let mut total = 0.0;
        for (i, x) in signals.iter().take(20).enumerate() {
            let m = op.measure(x, 0.05, &mut RandomSource::new(1, i as u64))?;
            let est = latent_map_estimate(
                &m,
                &model,
                &MapConfig {
                    k,
                    gamma: 1e-3,
                    step_size: 0.01,
                    steps: 5000,
                    ..MapConfig::default()
                },
            )?;
            total += mse(&est.x, x)?;
        }
        println!("k={k:<2} mean mse {:.4}", total / 20.0);
    }
    Ok(())
}
