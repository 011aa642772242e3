//! Experiment plumbing: datasets, metrics, CSV and SVG output, configs and
//! the command-line front end.

mod artifacts;
mod cli;
pub mod config;
mod csv;
mod dataset;
mod metrics;
pub mod recipes;
mod svg;

pub use artifacts::Autoencoder;
pub use cli::run_cli;
pub use csv::{parse_records, records_to_csv, select_k, summarize, theory_to_csv, Metric, MetricSummary, RECORD_HEADER, THEORY_HEADER};
pub use dataset::{geometric_spectrum, synth_lowrank_dataset, DataSpec, LowRankSource};
pub use metrics::{mse, psnr, psnr_from_mse, ExperimentRecord, Psnr, PSNR_CAP_DB};
pub use svg::render_chart;
