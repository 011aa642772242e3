//! Trains the nested-dropout VAE on synthetic low-rank signals, reports the
//! truncated reconstruction error per k and reloads the saved model.

use tunable_prior::harness::DataSpec;
use tunable_prior::models::{vae_train, TrainConfig, TunableVae, VaeConfig};

fn main() -> tunable_prior::Result<()> {
    let data = DataSpec {
        n: 16,
        count: 2000,
        heldout: 200,
        ..DataSpec::default()
    };
    let cfg = VaeConfig {
        latent_dim: 6,
        hidden: 32,
        train: TrainConfig {
            steps: 4000,
            step_size: 2e-3,
            ..TrainConfig::default()
        },
        ..VaeConfig::default()
    };
    let (vae, report) = vae_train(&data.train()?, &cfg)?;
    let smooth = report.smoothed(100);
    println!("loss: first {:.4}, last {:.4}", smooth[0], smooth[smooth.len() - 1]);
    let heldout = data.heldout()?;
    for (k, e) in vae.error_profile(&heldout)?.iter().enumerate() {
        println!("k={} reconstruction mse {e:.4}", k + 1);
    }
    let dir = std::env::temp_dir().join("tunable_prior_vae");
    vae.save(&dir)?;
    let back = TunableVae::load(&dir)?;
    println!("reloaded model identical: {}", back == vae);
    Ok(())
}
