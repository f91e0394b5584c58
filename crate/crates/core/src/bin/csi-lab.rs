use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use csi_lab::channel::{Dataset, GenerationConfig, Generator};
use csi_lab::eval::experiment::{self, HEATMAP_FILE};
use csi_lab::eval::{ExperimentConfig, TrainRunConfig};
use csi_lab::polardensenet::{train, PolarDenseNet};
use csi_lab::{Error, Result};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

pub const DATASET_FILE: &str = "dataset.bin";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const HISTORY_FILE: &str = "history.csv";

#[derive(Parser)]
#[command(name = "csi-lab", version, about = "CSI feedback compression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a dataset of precoder matrices.
    Generate(Common),
    /// Train an autoencoder on a generated dataset.
    Train(Common),
    /// Evaluate the configured arms and write CSV tables.
    Eval(Common),
    /// Dump the heatmap for a single sample.
    Inspect {
        #[command(flatten)]
        common: Common,
        /// Overrides `heatmap_sample` from the config.
        #[arg(long)]
        sample: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl Common {
    fn config(&self) -> Result<&Path> {
        self.config
            .as_deref()
            .ok_or_else(|| Error::Config("--config is required for this command".into()))
    }
}

fn generate(c: &Common) -> Result<()> {
    let mut cfg = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => Error::MissingArtifact(path.clone()),
                _ => Error::Io(e),
            })?;
            GenerationConfig::parse(&text)?
        }
        None => GenerationConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    let data = Generator::from_config(&cfg)?.generate(cfg.samples)?;
    std::fs::create_dir_all(&c.out)?;
    let path = c.out.join(DATASET_FILE);
    data.write(&path)?;
    eprintln!("wrote {} samples (N={}, K={}) to {}", data.len(), data.n, data.k, path.display());
    Ok(())
}

fn train_cmd(c: &Common) -> Result<()> {
    let mut cfg = TrainRunConfig::load(c.config()?)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    let data = Dataset::read(&cfg.dataset)?;
    if cfg.validation == 0 || cfg.validation >= data.len() {
        return Err(Error::Config(format!(
            "validation = {} must be in 1..{}",
            cfg.validation,
            data.len()
        )));
    }
    let model_cfg = cfg.model_config(data.n, data.k)?;
    let train_cfg = cfg.train_config()?;
    let (train_set, val_set) = data.split_tail(cfg.validation);
    let mut model = PolarDenseNet::<f32>::new(model_cfg, cfg.seed)?;
    let history = train(&mut model, &train_set.samples, &val_set.samples, &train_cfg, |r| {
        eprintln!(
            "epoch {:>4}  lr {:.2e}  train {:.4}  val {:.4}  val_nmse {:.2} dB",
            r.epoch, r.lr, r.train_mse, r.val_mse, r.val_nmse_db
        );
    })?;
    std::fs::create_dir_all(&c.out)?;
    model.save(&c.out.join(CHECKPOINT_FILE))?;
    std::fs::write(c.out.join(HISTORY_FILE), history.to_csv())?;
    if let Some(best) = history.best() {
        eprintln!("kept epoch {} ({:.2} dB)", best.epoch, best.val_nmse_db);
    }
    Ok(())
}

fn experiment_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(c.config()?)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn eval(c: &Common) -> Result<()> {
    let cfg = experiment_config(c)?;
    let report = experiment::run_experiment(&cfg)?;
    report.write(&c.out)?;
    print!("{}", report.metrics_csv());
    Ok(())
}

fn inspect(c: &Common, sample: Option<usize>) -> Result<()> {
    let cfg = experiment_config(c)?;
    let data = experiment::load_test_set(&cfg)?;
    let arms = experiment::build_arms(&cfg, &data)?;
    let map = experiment::heatmap(&data, &arms, sample.unwrap_or(cfg.heatmap_sample))?;
    std::fs::create_dir_all(&c.out)?;
    std::fs::write(c.out.join(HEATMAP_FILE), map)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(c) => generate(c),
        Command::Train(c) => train_cmd(c),
        Command::Eval(c) => eval(c),
        Command::Inspect { common, sample } => inspect(common, *sample),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::MissingArtifact(_) => 3,
                _ => 1,
            })
        }
    }
}
