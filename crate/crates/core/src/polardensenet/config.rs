use crate::error::{Error, Result};
use crate::nn::checkpoint::fnv1a64;
use crate::nn::LRELU_ALPHA;

#[derive(Clone, Debug, PartialEq)]
pub struct PolarDenseNetConfig {
    pub n: usize,
    pub k: usize,
    /// Compression ratio: latent size over `2 N K`.
    pub gamma: f64,
    /// Quantizer bits per latent value.
    pub beta: u32,
    pub latent_dim: usize,
    pub path_channels: usize,
    pub dense_block_layers: usize,
    pub growth_channels: usize,
    pub decoder_blocks: usize,
    pub alpha: f64,
    /// One set of path weights for both polarizations.
    pub shared_paths: bool,
    /// When false the latent skips the quantizer (ablation and gradient
    /// checks).
    pub quantize: bool,
}

impl PolarDenseNetConfig {
    /// `latent_dim = round(2 N K gamma)`.
    pub fn new(n: usize, k: usize, gamma: f64) -> Result<Self> {
        let cfg = PolarDenseNetConfig {
            n,
            k,
            gamma,
            beta: 2,
            latent_dim: ((2 * n * k) as f64 * gamma).round() as usize,
            path_channels: 8,
            dense_block_layers: 3,
            growth_channels: 8,
            decoder_blocks: 2,
            alpha: LRELU_ALPHA,
            shared_paths: false,
            quantize: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Named presets for `N = 32`, `K = 13`. `1/20` pins 40 latent values.
    pub fn preset(name: &str) -> Result<Self> {
        let (gamma, pinned) = match name {
            "1/8" => (1.0 / 8.0, None),
            "1/16" => (1.0 / 16.0, None),
            "1/20" => (1.0 / 20.0, Some(40)),
            other => return Err(Error::Config(format!("unknown preset {other:?}"))),
        };
        let mut cfg = Self::new(32, 13, gamma)?;
        if let Some(d) = pinned {
            cfg.latent_dim = d;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n % 2 != 0 || self.k == 0 {
            return Err(Error::Config(format!(
                "need even N and positive K, got N={} K={}",
                self.n, self.k
            )));
        }
        if self.latent_dim == 0 {
            return Err(Error::Config("latent_dim must be at least 1".into()));
        }
        if self.beta == 0 || self.beta > 16 {
            return Err(Error::Config(format!("beta = {} outside 1..=16", self.beta)));
        }
        if self.path_channels == 0 || self.growth_channels == 0 || self.dense_block_layers == 0 {
            return Err(Error::Config("channel counts must be positive".into()));
        }
        Ok(())
    }

    pub fn half(&self) -> usize {
        self.n / 2
    }

    /// Channels after the two encoder paths are concatenated.
    pub fn trunk_channels(&self) -> usize {
        2 * self.path_channels
    }

    pub fn block_out_channels(&self) -> usize {
        self.trunk_channels() + self.dense_block_layers * self.growth_channels
    }

    /// Feedback payload, `latent_dim * beta`.
    pub fn feedback_bits(&self) -> usize {
        self.latent_dim * self.beta as usize
    }

    /// Identifies the parameter layout; stored in checkpoints.
    pub fn arch_hash(&self) -> u64 {
        let desc = format!(
            "polardensenet n={} k={} latent={} beta={} paths={} layers={} growth={} decoder={} shared={}",
            self.n,
            self.k,
            self.latent_dim,
            self.beta,
            self.path_channels,
            self.dense_block_layers,
            self.growth_channels,
            self.decoder_blocks,
            self.shared_paths
        );
        fnv1a64(desc.as_bytes())
    }
}
