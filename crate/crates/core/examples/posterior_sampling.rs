//! Posterior sampling with a truncated latent prior. The prior is the exact
//! noise predictor of a Gaussian latent and the decoder is the linear
//! generator, so the only learned part is skipped and the effect of `k`
//! shows directly.

use std::sync::Arc;

use tunable_prior::diffusion::{GaussianPriorDenoiser, ScheduleSpec};
use tunable_prior::forward::ForwardOperator;
use tunable_prior::harness::{geometric_spectrum, mse, LowRankSource};
use tunable_prior::inversion::{run_inversion, Guidance, InversionConfig};
use tunable_prior::models::LinearDecoder;
use tunable_prior::tensor::{Matrix, RandomSource};

fn main() -> tunable_prior::Result<()> {
    let n = 16;
    let source = LowRankSource::new(n, &geometric_spectrum(n, 2.0, 0.75), 1)?;
    let fam = source.family();
    // Columns u_i·s_i: the generator expressed in its own latent basis.
    let g = Matrix::from_fn(n, n, |i, j| fam.u()[(i, j)] * fam.spectrum()[j]);
    let decoder = LinearDecoder(g);
    let schedule = ScheduleSpec::default().build()?;
    let prior = GaussianPriorDenoiser::new(n, 1.0, schedule.alpha_bars());
    let op = Arc::new(ForwardOperator::dense_gaussian(10, n, 2)?);
    let signals = source.sample(10, 1);

    for guidance in [Guidance::QuadraticProx, Guidance::Gradient] {
        println!("{guidance:?}");
        for k in [2, 4, 8, 16] {
            let cfg = InversionConfig {
                k: Some(k),
                guidance,
                zeta: 0.05,
                ..InversionConfig::default()
            };
            let mut total = 0.0;
            for (i, x) in signals.iter().enumerate() {
                let mut rng = RandomSource::new(7, i as u64);
                let m = op.measure(x, 0.1, &mut rng)?;
                let run = run_inversion(&m, &decoder, &prior, &schedule, &cfg, &mut rng)?;
                total += mse(&run.x, x)?;
            }
            println!("  k={k:<2} mean mse {:.4}", total / signals.len() as f64);
        }
    }
    Ok(())
}
