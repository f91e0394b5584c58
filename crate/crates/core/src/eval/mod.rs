//! Metrics, noise injection and experiment orchestration.

pub mod config;
pub mod experiment;
pub mod metrics;
pub mod noise;

pub use config::{ArmConfig, ExperimentConfig, TrainRunConfig};
pub use experiment::{run_experiment, MetricsRecord, Report};
pub use metrics::{cosine_similarity, nmse, Nmse};
pub use noise::{add_awgn, add_awgn_all, NoiseSpec};
