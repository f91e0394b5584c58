use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Linear warm-up from `lr_min` to `lr_max`, then cosine annealing back to
/// `lr_min` at `total_epochs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosineWarmupSchedule {
    pub lr_min: f64,
    pub lr_max: f64,
    pub warmup_epochs: usize,
    pub total_epochs: usize,
}

impl CosineWarmupSchedule {
    pub fn new(lr_min: f64, lr_max: f64, warmup_epochs: usize, total_epochs: usize) -> Result<Self> {
        if !(lr_min > 0.0 && lr_max >= lr_min) {
            return Err(Error::Config(format!(
                "need 0 < lr_min <= lr_max, got {lr_min} and {lr_max}"
            )));
        }
        if warmup_epochs >= total_epochs {
            return Err(Error::Config(format!(
                "warm-up ({warmup_epochs}) must be shorter than the run ({total_epochs})"
            )));
        }
        Ok(CosineWarmupSchedule {
            lr_min,
            lr_max,
            warmup_epochs,
            total_epochs,
        })
    }

    /// lr_min 1e-4, lr_max 1e-2, 30 warm-up epochs.
    pub fn standard(total_epochs: usize) -> Result<Self> {
        Self::new(1e-4, 1e-2, 30.min(total_epochs.saturating_sub(1)), total_epochs)
    }

    pub fn lr(&self, epoch: usize) -> Result<f64> {
        if epoch > self.total_epochs {
            return Err(Error::Contract(format!(
                "epoch {epoch} beyond schedule length {}",
                self.total_epochs
            )));
        }
        let span = self.lr_max - self.lr_min;
        if epoch < self.warmup_epochs {
            return Ok(self.lr_min + span * epoch as f64 / self.warmup_epochs as f64);
        }
        let progress =
            (epoch - self.warmup_epochs) as f64 / (self.total_epochs - self.warmup_epochs) as f64;
        Ok(self.lr_min + 0.5 * span * (1.0 + (PI * progress).cos()))
    }
}
