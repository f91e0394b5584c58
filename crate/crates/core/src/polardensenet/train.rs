use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::PolarDenseNet;
use crate::channel::{PrecoderChannelMatrix, Symmetry};
use crate::error::{Error, Result};
use crate::eval::metrics::to_db;
use crate::eval::noise::{add_awgn_all, NoiseSpec};
use crate::nn::{AdamState, BatchNorm, CosineWarmupSchedule, Mode};
use crate::tensor::{Scalar, Tape, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_min: f64,
    pub lr_max: f64,
    pub warmup_epochs: usize,
    pub seed: u64,
    /// Noise added to the encoder input (train and validation); targets stay
    /// clean.
    pub noise: Option<NoiseSpec>,
    /// Draws a random [`Symmetry`] per sample and epoch.
    pub augment: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 400,
            batch_size: 200,
            lr_min: 1e-4,
            lr_max: 1e-2,
            warmup_epochs: 30,
            seed: 0,
            noise: None,
            augment: true,
        }
    }
}

impl TrainConfig {
    pub fn schedule(&self) -> Result<CosineWarmupSchedule> {
        CosineWarmupSchedule::new(
            self.lr_min,
            self.lr_max,
            self.warmup_epochs.min(self.epochs.saturating_sub(1)),
            self.epochs,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_mse: f64,
    pub val_mse: f64,
    pub val_nmse_db: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub records: Vec<EpochRecord>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
}

impl History {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.records.iter().find(|r| r.epoch == self.best_epoch)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,lr,train_mse,val_mse,val_nmse_db\n");
        for r in &self.records {
            writeln!(
                s,
                "{},{:e},{:.6},{:.6},{:.4}",
                r.epoch, r.lr, r.train_mse, r.val_mse, r.val_nmse_db
            )
            .expect("writing to a String");
        }
        s
    }
}

/// Mean squared error and NMSE (linear) of eval-mode reconstructions.
pub fn evaluate<T: Scalar>(
    model: &PolarDenseNet<T>,
    inputs: &[PrecoderChannelMatrix],
    targets: &[PrecoderChannelMatrix],
    batch: usize,
) -> Result<(f64, f64)> {
    let recon = model.reconstruct(inputs, batch)?;
    let mut mse = 0.0;
    let mut nmse = 0.0;
    for (h, r) in targets.iter().zip(&recon) {
        let err: f64 = h
            .matrix()
            .as_slice()
            .iter()
            .zip(r.matrix().as_slice())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        mse += err;
        nmse += err / h.matrix().frobenius_sq();
    }
    let n = targets.len().max(1) as f64;
    Ok((mse / n, nmse / n))
}

/// Minimizes the per-sample squared reconstruction error with Adam under a
/// warm-up/cosine schedule, optionally on symmetry-augmented samples. The parameters with the lowest validation MSE
/// are restored at the end. `on_epoch` sees every record as it is produced.
pub fn train<T: Scalar>(
    model: &mut PolarDenseNet<T>,
    train_set: &[PrecoderChannelMatrix],
    val_set: &[PrecoderChannelMatrix],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<History> {
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Config("training and validation sets must be non-empty".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let schedule = cfg.schedule()?;
    let mut adam = AdamState::new(model.params.tensors());
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let val_inputs = match &cfg.noise {
        Some(spec) => add_awgn_all(val_set, spec, cfg.seed ^ 0x5eed_0000_0000_0001),
        None => val_set.to_vec(),
    };

    let mut history = History::default();
    let mut best: Option<(f64, Vec<Tensor<T>>, Vec<BatchNorm>)> = None;
    for epoch in 0..cfg.epochs {
        let lr = schedule.lr(epoch)?;
        order.shuffle(&mut rng);
        let augmented;
        let targets = if cfg.augment {
            augmented = train_set
                .iter()
                .map(|h| h.transformed(Symmetry::from_bits(rng.gen_range(0..8))))
                .collect::<Result<Vec<_>>>()?;
            &augmented[..]
        } else {
            train_set
        };
        let noisy;
        let inputs = match &cfg.noise {
            Some(spec) => {
                noisy = add_awgn_all(targets, spec, cfg.seed.wrapping_add(epoch as u64 + 1));
                &noisy[..]
            }
            None => targets,
        };
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xs: Vec<&PrecoderChannelMatrix> = batch.iter().map(|&i| &inputs[i]).collect();
            let ts: Vec<&PrecoderChannelMatrix> = batch.iter().map(|&i| &targets[i]).collect();
            let mut tape = Tape::new();
            let p = model.params.bind(&mut tape);
            let x = tape.constant(model.batch_tensor(&xs)?);
            let t = tape.constant(model.batch_tensor(&ts)?);
            let (f, stats) = model.forward(&mut tape, &p, x, Mode::Train)?;
            let loss = tape.mse_loss(f.output, t)?;
            let l = tape.value(loss).item().as_f64();
            if !l.is_finite() {
                return Err(Error::Divergence { epoch, loss: l });
            }
            total += l * batch.len() as f64;
            tape.backward(loss)?;
            model.params.collect_grads(&mut tape, &p);
            adam.step(model.params.tensors_mut(), lr)?;
            model.apply_stats(&stats);
        }
        let train_mse = total / train_set.len() as f64;
        let (val_mse, val_nmse) = evaluate(model, &val_inputs, val_set, cfg.batch_size)?;
        if !val_mse.is_finite() {
            return Err(Error::Divergence { epoch, loss: val_mse });
        }
        let rec = EpochRecord {
            epoch,
            lr,
            train_mse,
            val_mse,
            val_nmse_db: to_db(val_nmse),
        };
        on_epoch(&rec);
        history.records.push(rec);
        if best.as_ref().map_or(true, |b| val_mse < b.0) {
            history.best_epoch = epoch;
            best = Some((val_mse, model.params.tensors().to_vec(), model.norms.clone()));
        }
    }
    if let Some((_, params, norms)) = best {
        for (dst, src) in model.params.tensors_mut().iter_mut().zip(params) {
            *dst = src;
        }
        model.norms = norms;
    }
    model.params.zero_grad();
    Ok(history)
}
