//! CSI feedback compression lab: synthetic channels, Type-II style codebook
//! baselines and a polarization-aware convolutional autoencoder.

pub mod channel;
pub mod codebook;
pub mod error;
pub mod eval;
pub mod nn;
pub mod par;
pub mod polardensenet;
pub mod tensor;

pub use error::{Error, Result};
