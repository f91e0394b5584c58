//! Polarization-aware dense convolutional autoencoder for precoder matrices.

pub mod config;
pub mod model;
pub mod ops;

pub use config::PolarDenseNetConfig;
pub use model::{dequantize, quantize, Forward, LatentCode, PolarDenseNet};
pub mod train;

pub use train::{evaluate, train, EpochRecord, History, TrainConfig};
