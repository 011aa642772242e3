//! Latent diffusion: schedule, forward marginal, reverse updates, an MLP
//! noise predictor, and training with the truncated-latent mixed loss.

mod denoiser;
mod sample;
mod schedule;
mod train;

pub use denoiser::{time_embedding, DenoiserNet, GaussianPriorDenoiser, NoisePredictor, TIME_EMBED_DIM, TIME_FREQUENCIES};
pub use sample::{ddim_step, generate, generate_ddim, reverse_step, SampleRun};
pub(crate) use sample::{check_sigma, reverse_mean};
pub use schedule::{forward_marginal, forward_marginal_with, make_schedule, predict_z0, NoiseSchedule, ScheduleSpec};
pub(crate) use schedule::predict_z0_unchecked;
pub use train::{ldm_loss, ldm_loss_and_grad, ldm_loss_with, ldm_train, load_denoiser, save_denoiser, LdmConfig, LdmDraw};
