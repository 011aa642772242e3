//! DDPM on a 2-D standard normal: train the noise predictor, sample with
//! the plain reverse update and with DDIM updates.

use tunable_prior::diffusion::{generate, generate_ddim, ldm_train, LdmConfig, ScheduleSpec};
use tunable_prior::models::TrainConfig;
use tunable_prior::tensor::{RandomSource, RunningStats};

fn main() -> tunable_prior::Result<()> {
    let mut rng = RandomSource::from_seed(9);
    let data: Vec<_> = (0..4000).map(|_| rng.normal_vec(2)).collect();
    let cfg = LdmConfig {
        schedule: ScheduleSpec {
            steps: 100,
            beta_start: 1e-4,
            beta_end: 0.05,
        },
        hidden: 64,
        lambda_mix: 0.0,
        train: TrainConfig {
            steps: 5000,
            batch_size: 64,
            step_size: 5e-3,
            ..TrainConfig::default()
        },
        ..LdmConfig::default()
    };
    let (net, _) = ldm_train(&data, &cfg)?;
    let schedule = cfg.schedule.build()?;
    let runs: [(&str, f64, bool); 3] = [("reverse, eta = 1", 1.0, false), ("reverse, eta = 0", 0.0, false), ("ddim, eta = 0", 0.0, true)];
    for (name, eta, ddim) in runs {
        let mut stats = [RunningStats::default(), RunningStats::default()];
        for _ in 0..2000 {
            let z = if ddim {
                generate_ddim(&schedule, &net, eta, false, &mut rng)?.z0
            } else {
                generate(&schedule, &net, eta, false, &mut rng)?.z0
            };
            stats[0].push(z[0]);
            stats[1].push(z[1]);
        }
        println!(
            "{name}: mean ({:.3}, {:.3}), variance ({:.3}, {:.3})",
            stats[0].mean(),
            stats[1].mean(),
            stats[0].variance(),
            stats[1].variance()
        );
    }
    Ok(())
}
