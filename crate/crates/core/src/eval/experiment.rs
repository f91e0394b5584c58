use std::fmt::Write as _;
use std::path::Path;

use crate::channel::{AntennaConfig, Dataset, Generator, PrecoderChannelMatrix};
use crate::codebook::CodebookConfig;
use crate::error::{Error, Result};
use crate::eval::config::{ArmConfig, ExperimentConfig};
use crate::eval::metrics::{cosine_similarity, format_db, nmse, Nmse};
use crate::eval::noise::add_awgn_all;
use crate::polardensenet::PolarDenseNet;

pub const METRICS_FILE: &str = "metrics.csv";
pub const HEATMAP_FILE: &str = "heatmap.csv";
pub const NOISE_FILE: &str = "rho_noise.csv";
pub const METRICS_HEADER: &str = "scheme,params,bits,nmse_db,rho,n_samples";

/// Samples per autoencoder inference batch.
const AE_BATCH: usize = 200;

/// One evaluated arm.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub scheme: String,
    pub params: String,
    pub bits: u64,
    pub nmse: Nmse,
    pub rho: f64,
    pub n_samples: usize,
}

impl MetricsRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{}",
            self.scheme,
            self.params,
            self.bits,
            format_db(self.nmse.db),
            self.rho,
            self.n_samples
        )
    }
}

pub fn metrics_csv(records: &[MetricsRecord]) -> String {
    let mut s = format!("{METRICS_HEADER}\n");
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// A reconstruction scheme ready to run.
pub enum Arm {
    Codebook {
        cfg: CodebookConfig,
        antenna: AntennaConfig,
    },
    Autoencoder(Box<PolarDenseNet<f32>>),
}

impl Arm {
    pub fn build(cfg: &ArmConfig, antenna: &AntennaConfig, n: usize, k: usize) -> Result<Self> {
        if let Some(cb) = cfg.codebook() {
            return Ok(Arm::Codebook {
                cfg: cb,
                antenna: *antenna,
            });
        }
        let ArmConfig::Ae { checkpoint } = cfg else {
            unreachable!("non-codebook arms are autoencoders")
        };
        let model = PolarDenseNet::<f32>::load(checkpoint)?;
        if (model.cfg.n, model.cfg.k) != (n, k) {
            return Err(Error::Config(format!(
                "{} expects N={} K={}, test set is N={n} K={k}",
                checkpoint.display(),
                model.cfg.n,
                model.cfg.k
            )));
        }
        Ok(Arm::Autoencoder(Box::new(model)))
    }

    pub fn scheme(&self) -> &'static str {
        match self {
            Arm::Codebook { cfg, .. } => cfg.scheme.name(),
            Arm::Autoencoder(_) => "polardensenet",
        }
    }

    pub fn params(&self) -> String {
        match self {
            Arm::Codebook { cfg, .. } if cfg.quant.quantized => cfg.scheme.params(),
            Arm::Codebook { cfg, .. } => format!("{};unquantized", cfg.scheme.params()),
            Arm::Autoencoder(m) => format!("gamma={};beta={}", gamma_label(m.cfg.gamma), m.cfg.beta),
        }
    }

    pub fn bits(&self, k: usize) -> u64 {
        match self {
            Arm::Codebook { cfg, antenna } => cfg.bits(antenna, k).total(),
            Arm::Autoencoder(m) => m.cfg.feedback_bits() as u64,
        }
    }

    pub fn reconstruct(&self, inputs: &[PrecoderChannelMatrix]) -> Result<Vec<PrecoderChannelMatrix>> {
        match self {
            Arm::Codebook { cfg, antenna } => cfg.reconstruct_all(antenna, inputs),
            Arm::Autoencoder(m) => m.reconstruct(inputs, AE_BATCH),
        }
    }

    /// `rel15 L=4`, `polardensenet gamma=1/8;beta=2`.
    pub fn label(&self) -> String {
        format!("{} {}", self.scheme(), self.params())
    }
}

/// `1/8` when `gamma` is the reciprocal of an integer.
pub fn gamma_label(gamma: f64) -> String {
    let inv = 1.0 / gamma;
    if (inv - inv.round()).abs() < 1e-9 {
        format!("1/{}", inv.round() as u64)
    } else {
        format!("{gamma}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseRecord {
    pub scheme: String,
    pub params: String,
    pub noise: String,
    pub rho: f64,
}

/// Everything an experiment produces.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub records: Vec<MetricsRecord>,
    pub noise: Vec<NoiseRecord>,
    pub heatmap: String,
}

impl Report {
    pub fn metrics_csv(&self) -> String {
        metrics_csv(&self.records)
    }

    pub fn noise_csv(&self) -> String {
        let mut s = String::from("scheme,params,snr_db,rho\n");
        for r in &self.noise {
            writeln!(s, "{},{},{},{:.6}", r.scheme, r.params, r.noise, r.rho).expect("String write");
        }
        s
    }

    /// Writes the three output files into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(METRICS_FILE), self.metrics_csv())?;
        std::fs::write(dir.join(NOISE_FILE), self.noise_csv())?;
        std::fs::write(dir.join(HEATMAP_FILE), &self.heatmap)?;
        Ok(())
    }
}

/// The configured test set, read from disk or generated.
pub fn load_test_set(cfg: &ExperimentConfig) -> Result<Dataset> {
    match (&cfg.dataset, &cfg.channel) {
        (Some(path), _) => Dataset::read(path),
        (None, Some(gen)) => Generator::from_config(gen)?.generate(gen.samples),
        (None, None) => Err(Error::Config("no test set configured".into())),
    }
}

pub fn build_arms(cfg: &ExperimentConfig, data: &Dataset) -> Result<Vec<Arm>> {
    let antenna = cfg.antenna(data.n)?;
    cfg.arms
        .iter()
        .map(|a| Arm::build(a, &antenna, data.n, data.k))
        .collect()
}

/// `|H|` per entry as `source,row,col,magnitude` lines.
fn heatmap_rows(out: &mut String, source: &str, h: &PrecoderChannelMatrix) {
    let m = h.matrix();
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            writeln!(out, "{source},{r},{c},{:.6}", m[(r, c)].norm()).expect("String write");
        }
    }
}

/// Heatmap data for sample `index`: the original followed by every arm.
pub fn heatmap(data: &Dataset, arms: &[Arm], index: usize) -> Result<String> {
    let h = data.samples.get(index).ok_or_else(|| {
        Error::Config(format!(
            "heatmap sample {index} out of range for {} samples",
            data.len()
        ))
    })?;
    let mut s = String::from("source,row,col,magnitude\n");
    heatmap_rows(&mut s, "original", h);
    for arm in arms {
        let r = arm.reconstruct(std::slice::from_ref(h))?;
        heatmap_rows(&mut s, &arm.label(), &r[0]);
    }
    Ok(s)
}

/// Evaluates every arm on the same test set, clean and under each noise
/// range. Noisy inputs are scored against the clean samples.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let data = load_test_set(cfg)?;
    let arms = build_arms(cfg, &data)?;
    let specs = cfg.noise_specs()?;
    let noisy: Vec<Vec<PrecoderChannelMatrix>> = specs
        .iter()
        .enumerate()
        .map(|(i, s)| add_awgn_all(&data.samples, s, cfg.seed.wrapping_add(i as u64)))
        .collect();

    let mut records = Vec::new();
    let mut noise = Vec::new();
    for arm in &arms {
        if data.is_empty() {
            return Err(Error::Config("test set is empty".into()));
        }
        let recon = arm.reconstruct(&data.samples)?;
        records.push(MetricsRecord {
            scheme: arm.scheme().to_string(),
            params: arm.params(),
            bits: arm.bits(data.k),
            nmse: nmse(&data.samples, &recon)?,
            rho: cosine_similarity(&data.samples, &recon)?,
            n_samples: data.len(),
        });
        for (spec, inputs) in specs.iter().zip(&noisy) {
            let recon = arm.reconstruct(inputs)?;
            noise.push(NoiseRecord {
                scheme: arm.scheme().to_string(),
                params: arm.params(),
                noise: spec.label(),
                rho: cosine_similarity(&data.samples, &recon)?,
            });
        }
    }
    let heatmap = if data.is_empty() {
        String::from("source,row,col,magnitude\n")
    } else {
        heatmap(&data, &arms, cfg.heatmap_sample)?
    };
    Ok(Report {
        records,
        noise,
        heatmap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_channel(samples: usize) -> String {
        format!("[channel]\nn1 = 4\nrbs = 16\nsamples = {samples}\nseed = 5\n")
    }

    #[test]
    fn empty_arm_list_gives_header_only() {
        let cfg = ExperimentConfig::parse(&small_channel(3)).unwrap();
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.metrics_csv(), format!("{METRICS_HEADER}\n"));
        assert_eq!(report.noise_csv().lines().count(), 1);
        assert_eq!(report.heatmap.lines().count(), 1 + 8 * 4);
    }

    #[test]
    fn codebook_arms_are_reported_and_reproducible() {
        let text = format!(
            "seed = 9\n{}[[arm]]\nscheme = 'rel15'\nl = 2\n[[arm]]\nscheme = 'rel16'\nl = 2\nm = 2\n",
            small_channel(6)
        );
        let cfg = ExperimentConfig::parse(&text).unwrap();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 2);
        assert_eq!(a.noise.len(), 6);
        let first = &a.records[0];
        assert_eq!((first.scheme.as_str(), first.params.as_str()), ("rel15", "L=2"));
        assert_eq!(first.n_samples, 6);
        assert!(first.rho > 0.0 && first.rho <= 1.0);
        let csv = a.metrics_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1].split(',').count(), 6);
        assert_eq!(a.heatmap.lines().count(), 1 + 3 * 32);
        assert!(a.heatmap.contains("\nrel16 L=2;M=2,0,0,"));
    }

    #[test]
    fn identical_reconstruction_row() {
        let r = MetricsRecord {
            scheme: "x".into(),
            params: "p".into(),
            bits: 0,
            nmse: Nmse::from_linear(0.0),
            rho: 1.0,
            n_samples: 1,
        };
        assert_eq!(r.csv_row(), "x,p,0,-inf,1.000000,1");
    }

    #[test]
    fn missing_checkpoint_is_named() {
        let text = format!("{}[[arm]]\nscheme = 'ae'\ncheckpoint = '/nonexistent/m.ckpt'\n", small_channel(2));
        let cfg = ExperimentConfig::parse(&text).unwrap();
        match run_experiment(&cfg) {
            Err(Error::MissingArtifact(p)) => assert!(p.ends_with("m.ckpt")),
            other => panic!("expected missing artifact, got {other:?}"),
        }
    }

    #[test]
    fn labels() {
        assert_eq!(gamma_label(0.125), "1/8");
        assert_eq!(gamma_label(0.05), "1/20");
        assert_eq!(gamma_label(0.3), "0.3");
    }
}
