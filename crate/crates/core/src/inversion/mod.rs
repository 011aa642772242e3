//! Inverse-problem solvers over tunable priors: diffusion posterior
//! sampling with quadratic or gradient data consistency, latent MAP, and
//! the k-sweep driver.

mod config;
mod map;
mod posterior;
mod sweep;

pub use config::{Guidance, InnerSolver, InversionConfig, MapConfig, SigmaPolicy, SIGMA_FLOOR};
pub use map::{latent_map_estimate, map_objective, MapEstimate};
pub use posterior::{
    gradient_guided_sample, inner_objective, inner_solve, run_inversion, tunable_posterior_sample, InnerResult,
    PosteriorRun,
};
pub use sweep::{
    sweep_k, trial_rng, LatentMapSweep, LinearTheorySweep, PosteriorSweep, SweepProblem, SweepSettings, TrialOutcome,
};
