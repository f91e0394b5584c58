//! TOML front ends for the experiment runner and the training command.
//!
//! Relative paths inside a config file are resolved against the directory
//! holding that file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::channel::{AntennaConfig, GenerationConfig};
use crate::codebook::{CodebookConfig, Scheme};
use crate::error::{Error, Result};
use crate::eval::noise::NoiseSpec;
use crate::polardensenet::{PolarDenseNetConfig, TrainConfig};

/// One row of the comparison table.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "scheme", rename_all = "lowercase", deny_unknown_fields)]
pub enum ArmConfig {
    Rel15 {
        l: usize,
        #[serde(default)]
        unquantized: bool,
    },
    Rel16 {
        l: usize,
        m: usize,
        #[serde(default)]
        unquantized: bool,
    },
    Ae {
        checkpoint: PathBuf,
    },
}

impl ArmConfig {
    pub fn codebook(&self) -> Option<CodebookConfig> {
        let (scheme, unquantized) = match *self {
            ArmConfig::Rel15 { l, unquantized } => (Scheme::Rel15 { l }, unquantized),
            ArmConfig::Rel16 { l, m, unquantized } => (Scheme::Rel16 { l, m }, unquantized),
            ArmConfig::Ae { .. } => return None,
        };
        Some(if unquantized {
            CodebookConfig::unquantized(scheme)
        } else {
            CodebookConfig::new(scheme)
        })
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seed for the noise draws.
    #[serde(default)]
    pub seed: u64,
    /// Test set written by `generate`. Takes precedence over `channel`.
    pub dataset: Option<PathBuf>,
    /// Generates the test set in memory when no `dataset` is given.
    pub channel: Option<GenerationConfig>,
    /// Array geometry for the codebook arms; defaults to `N/2 x 1`.
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    /// Sample dumped to the heatmap file.
    #[serde(default)]
    pub heatmap_sample: usize,
    /// SNR ranges in dB for the robustness table.
    #[serde(default = "default_noise")]
    pub noise: Vec<[f64; 2]>,
    #[serde(default, rename = "arm")]
    pub arms: Vec<ArmConfig>,
}

fn default_noise() -> Vec<[f64; 2]> {
    NoiseSpec::presets()
        .iter()
        .map(|s| [s.snr_low_db, s.snr_high_db])
        .collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.noise_specs()?;
        if cfg.dataset.is_none() && cfg.channel.is_none() {
            return Err(Error::Config("either `dataset` or a [channel] table is required".into()));
        }
        Ok(cfg)
    }

    /// Reads `path` and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_config(path)?;
        let mut cfg = Self::parse(&text)?;
        let base = base_dir(path);
        cfg.dataset = cfg.dataset.map(|p| base.join(p));
        for arm in &mut cfg.arms {
            if let ArmConfig::Ae { checkpoint } = arm {
                *checkpoint = base.join(&*checkpoint);
            }
        }
        Ok(cfg)
    }

    pub fn noise_specs(&self) -> Result<Vec<NoiseSpec>> {
        self.noise.iter().map(|&[l, h]| NoiseSpec::new(l, h)).collect()
    }

    pub fn antenna(&self, n: usize) -> Result<AntennaConfig> {
        let n2 = self.n2.unwrap_or(1);
        let n1 = self.n1.unwrap_or(n / (2 * n2.max(1)));
        let ant = AntennaConfig::new(n1, n2)?;
        if ant.n() != n {
            return Err(Error::Config(format!(
                "antenna {n1}x{n2} has {} ports but the dataset has N={n}",
                ant.n()
            )));
        }
        Ok(ant)
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// `1/8`, `1/16` or `1/20`; otherwise `gamma` is required.
    pub preset: Option<String>,
    pub gamma: Option<f64>,
    pub beta: Option<u32>,
    pub latent_dim: Option<usize>,
    pub path_channels: Option<usize>,
    pub dense_block_layers: Option<usize>,
    pub growth_channels: Option<usize>,
    pub decoder_blocks: Option<usize>,
    #[serde(default)]
    pub shared_paths: bool,
    #[serde(default = "yes")]
    pub quantize: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr_min: Option<f64>,
    pub lr_max: Option<f64>,
    pub warmup_epochs: Option<usize>,
    /// Input noise range in dB, e.g. `[0.0, 5.0]`.
    pub noise: Option<[f64; 2]>,
    /// Symmetry augmentation, on by default.
    pub augment: Option<bool>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrainRunConfig {
    pub dataset: PathBuf,
    /// Samples taken from the end of the dataset for validation.
    #[serde(default = "default_validation")]
    pub validation: usize,
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainSection,
}

fn default_validation() -> usize {
    500
}

impl TrainRunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::parse(&read_config(path)?)?;
        cfg.dataset = base_dir(path).join(&cfg.dataset);
        Ok(cfg)
    }

    /// Model configuration for a dataset of shape `n x k`.
    pub fn model_config(&self, n: usize, k: usize) -> Result<PolarDenseNetConfig> {
        let m = &self.model;
        let mut cfg = match (&m.preset, m.gamma) {
            (Some(p), None) => {
                let cfg = PolarDenseNetConfig::preset(p)?;
                if (cfg.n, cfg.k) != (n, k) {
                    return Err(Error::Config(format!(
                        "preset {p} is for N={} K={}, dataset is N={n} K={k}",
                        cfg.n, cfg.k
                    )));
                }
                cfg
            }
            (None, Some(g)) if g > 0.0 && g <= 1.0 => PolarDenseNetConfig::new(n, k, g)?,
            (None, Some(g)) => return Err(Error::Config(format!("gamma = {g} outside (0, 1]"))),
            _ => return Err(Error::Config("[model] needs exactly one of `preset` or `gamma`".into())),
        };
        if let Some(b) = m.beta {
            cfg.beta = b;
        }
        if let Some(d) = m.latent_dim {
            cfg.latent_dim = d;
        }
        if let Some(c) = m.path_channels {
            cfg.path_channels = c;
        }
        if let Some(l) = m.dense_block_layers {
            cfg.dense_block_layers = l;
        }
        if let Some(g) = m.growth_channels {
            cfg.growth_channels = g;
        }
        if let Some(d) = m.decoder_blocks {
            cfg.decoder_blocks = d;
        }
        cfg.shared_paths = m.shared_paths;
        cfg.quantize = m.quantize;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let t = &self.train;
        let d = TrainConfig::default();
        Ok(TrainConfig {
            epochs: t.epochs.unwrap_or(d.epochs),
            batch_size: t.batch_size.unwrap_or(d.batch_size),
            lr_min: t.lr_min.unwrap_or(d.lr_min),
            lr_max: t.lr_max.unwrap_or(d.lr_max),
            warmup_epochs: t.warmup_epochs.unwrap_or(d.warmup_epochs),
            seed: self.seed,
            noise: t.noise.map(|[l, h]| NoiseSpec::new(l, h)).transpose()?,
            augment: t.augment.unwrap_or(d.augment),
        })
    }
}

fn read_config(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingArtifact(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_arms_and_defaults() {
        let cfg = ExperimentConfig::parse(
            r#"
            dataset = "test.bin"
            [[arm]]
            scheme = "rel15"
            l = 4
            [[arm]]
            scheme = "rel16"
            l = 2
            m = 3
            unquantized = true
            [[arm]]
            scheme = "ae"
            checkpoint = "model.ckpt"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.arms.len(), 3);
        assert_eq!(cfg.noise.len(), 3);
        assert_eq!(cfg.arms[0].codebook().unwrap().scheme, Scheme::Rel15 { l: 4 });
        assert!(!cfg.arms[1].codebook().unwrap().quant.quantized);
        assert!(cfg.arms[2].codebook().is_none());
        assert_eq!(cfg.antenna(32).unwrap(), AntennaConfig::default());
        let pinned = ExperimentConfig { n1: Some(8), ..cfg.clone() };
        assert!(pinned.antenna(32).is_err());
        assert_eq!(pinned.antenna(16).unwrap().n(), 16);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "",
            "dataset = 'x'\nbogus = 1",
            "dataset = 'x'\n[[arm]]\nscheme = 'rel17'\nl = 2",
            "dataset = 'x'\n[[arm]]\nscheme = 'rel15'",
            "dataset = 'x'\nnoise = [[5.0, 0.0]]",
        ] {
            assert!(matches!(ExperimentConfig::parse(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn train_run_config() {
        let cfg = TrainRunConfig::parse(
            "dataset = 'd.bin'\nseed = 3\n[model]\npreset = '1/20'\n[train]\nepochs = 5\nnoise = [0.0, 5.0]",
        )
        .unwrap();
        let m = cfg.model_config(32, 13).unwrap();
        assert_eq!(m.feedback_bits(), 80);
        assert!(cfg.model_config(16, 13).is_err());
        let t = cfg.train_config().unwrap();
        assert_eq!((t.epochs, t.seed, t.batch_size), (5, 3, 200));
        assert_eq!(t.noise, Some(NoiseSpec::new(0.0, 5.0).unwrap()));

        let cfg = TrainRunConfig::parse("dataset = 'd.bin'\n[model]\ngamma = 0.25\nshared_paths = true").unwrap();
        let m = cfg.model_config(8, 4).unwrap();
        assert_eq!((m.latent_dim, m.shared_paths, m.quantize), (16, true, true));
        let both = TrainRunConfig::parse("dataset = 'd.bin'\n[model]\ngamma = 0.25\npreset = '1/8'").unwrap();
        assert!(both.model_config(32, 13).is_err());
    }

    #[test]
    fn missing_file_is_an_artifact_error() {
        let p = Path::new("/nonexistent/experiment.toml");
        assert!(matches!(ExperimentConfig::load(p), Err(Error::MissingArtifact(_))));
    }
}
