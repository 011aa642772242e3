//! Closed-form denoising risk of the truncated linear estimator, checked
//! against Monte Carlo, and how the best truncation moves with noise.

use tunable_prior::harness::geometric_spectrum;
use tunable_prior::tensor::RandomSource;
use tunable_prior::theory::{exhaustive_argmin, optimal_k, theory_table, DenoiseProblem, GeneratorFamily, OptimalRule};

fn main() -> tunable_prior::Result<()> {
    let mut rng = RandomSource::from_seed(0);
    let family = GeneratorFamily::random(&mut rng, &vec![2.0, 1.0, 0.5].into())?;
    let problem = DenoiseProblem::mle(family, 0.8)?;
    let (rows, best) = theory_table(&problem, 200_000, 1)?;
    println!("k  closed-form  monte-carlo (± se)");
    for r in &rows {
        println!(
            "{}  {:.4}       {:.4} ± {:.4}{}",
            r.k,
            r.closed_form,
            r.mc.mean,
            r.mc.std_error,
            if r.optimal { "   <- optimal" } else { "" }
        );
    }
    let rule = match best.rule {
        OptimalRule::Threshold => "threshold rule",
        OptimalRule::Exhaustive => "exhaustive search",
    };
    println!("k* = {} via {rule}\n", best.k);

    let spectrum = geometric_spectrum(32, 2.0, 0.8);
    let family = GeneratorFamily::random(&mut rng, &spectrum)?;
    println!("sigma   k* (MLE)  k* (gamma = sigma²/4)");
    for sigma in [1.0, 0.5, 0.25, 0.1, 0.05, 0.01] {
        let mle = DenoiseProblem::mle(family.clone(), sigma)?;
        let map = DenoiseProblem::new(family.clone(), sigma, sigma * sigma / 4.0)?;
        assert_eq!(optimal_k(&map).k, exhaustive_argmin(&map));
        println!("{sigma:<7} {:<9} {}", optimal_k(&mle).k, optimal_k(&map).k);
    }
    Ok(())
}
