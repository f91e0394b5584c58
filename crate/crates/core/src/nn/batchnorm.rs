use super::{Bound, Mode, ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::tensor::{BackwardCtx, BackwardOp, Scalar, Tape, Tensor, Var};

/// `[batch, channels, spatial...]` layout view.
fn layout(shape: &[usize]) -> (usize, usize, usize) {
    let batch = shape[0];
    let channels = shape[1];
    let inner = shape[2..].iter().product();
    (batch, channels, inner)
}

struct NormOp<T> {
    /// Normalized, pre-scale activations.
    xhat: Vec<T>,
    inv_std: Vec<T>,
    /// Whether the statistics came from this batch (train) or are constants.
    batch_stats: bool,
}

impl<T: Scalar> BackwardOp<T> for NormOp<T> {
    fn name(&self) -> &'static str {
        "batch_norm"
    }

    fn backward(&self, ctx: &BackwardCtx<'_, T>, g: &[T]) -> Vec<Option<Vec<T>>> {
        let (batch, channels, inner) = layout(ctx.inputs[0].shape());
        let gamma = ctx.inputs[1].data();
        let mut sum_g = vec![T::zero(); channels];
        let mut sum_gx = vec![T::zero(); channels];
        for b in 0..batch {
            for c in 0..channels {
                let off = (b * channels + c) * inner;
                for i in off..off + inner {
                    sum_g[c] += g[i];
                    sum_gx[c] += g[i] * self.xhat[i];
                }
            }
        }
        let dx = ctx.needs_grad[0].then(|| {
            let mut dx = vec![T::zero(); g.len()];
            let n = T::from_f64((batch * inner) as f64);
            for b in 0..batch {
                for c in 0..channels {
                    let off = (b * channels + c) * inner;
                    let k = gamma[c] * self.inv_std[c];
                    if self.batch_stats {
                        let (mg, mgx) = (sum_g[c] / n, sum_gx[c] / n);
                        for i in off..off + inner {
                            dx[i] = k * (g[i] - mg - self.xhat[i] * mgx);
                        }
                    } else {
                        for i in off..off + inner {
                            dx[i] = k * g[i];
                        }
                    }
                }
            }
            dx
        });
        vec![
            dx,
            ctx.needs_grad[1].then_some(sum_gx),
            ctx.needs_grad[2].then_some(sum_g),
        ]
    }
}

impl<T: Scalar> Tape<T> {
    /// Per-channel normalisation followed by `gamma * xhat + beta`.
    ///
    /// With `stats = None` the mean and biased variance are taken over the
    /// batch and every spatial position; they are returned so the caller can
    /// update running averages. With `Some((mean, var))` those are used as
    /// constants.
    pub fn batch_norm(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        eps: f64,
        stats: Option<(&[f64], &[f64])>,
    ) -> Result<(Var, Vec<f64>, Vec<f64>)> {
        let shape = self.shape(x).to_vec();
        if shape.len() < 2 {
            return Err(Error::Contract(format!(
                "batch_norm needs [batch, channels, ...], got {shape:?}"
            )));
        }
        let (batch, channels, inner) = layout(&shape);
        for p in [gamma, beta] {
            if self.shape(p) != [channels] {
                return Err(Error::dim("batch_norm", &shape, self.shape(p)));
            }
        }
        let xd = self.value(x).data();
        let (mean, var) = match stats {
            Some((m, v)) => {
                if m.len() != channels || v.len() != channels {
                    return Err(Error::Contract("running statistics length".into()));
                }
                (m.to_vec(), v.to_vec())
            }
            None => {
                let n = (batch * inner) as f64;
                let mut mean = vec![0.0; channels];
                let mut var = vec![0.0; channels];
                for b in 0..batch {
                    for (c, m) in mean.iter_mut().enumerate() {
                        let off = (b * channels + c) * inner;
                        *m += xd[off..off + inner].iter().map(|v| v.as_f64()).sum::<f64>();
                    }
                }
                mean.iter_mut().for_each(|m| *m /= n);
                for b in 0..batch {
                    for c in 0..channels {
                        let off = (b * channels + c) * inner;
                        var[c] += xd[off..off + inner]
                            .iter()
                            .map(|v| (v.as_f64() - mean[c]).powi(2))
                            .sum::<f64>();
                    }
                }
                var.iter_mut().for_each(|v| *v /= n);
                (mean, var)
            }
        };
        let inv_std: Vec<T> = var
            .iter()
            .map(|&v| T::from_f64(1.0 / (v + eps).sqrt()))
            .collect();
        let mean_t: Vec<T> = mean.iter().map(|&m| T::from_f64(m)).collect();
        let gd = self.value(gamma).data();
        let bd = self.value(beta).data();
        let mut xhat = vec![T::zero(); xd.len()];
        let mut out = vec![T::zero(); xd.len()];
        for b in 0..batch {
            for c in 0..channels {
                let off = (b * channels + c) * inner;
                for i in off..off + inner {
                    let h = (xd[i] - mean_t[c]) * inv_std[c];
                    xhat[i] = h;
                    out[i] = gd[c] * h + bd[c];
                }
            }
        }
        let t = Tensor::new(shape, out)?;
        let v = self.record(
            t,
            &[x, gamma, beta],
            NormOp {
                xhat,
                inv_std,
                batch_stats: stats.is_none(),
            },
        );
        Ok((v, mean, var))
    }
}

/// Per-channel statistics of one training batch (biased variance).
#[derive(Clone, Debug, PartialEq)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: usize,
}

/// Batch normalisation with running statistics for inference.
#[derive(Clone, Debug)]
pub struct BatchNorm {
    pub channels: usize,
    pub gamma: ParamId,
    pub beta: ParamId,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub eps: f64,
    /// Weight of the old running value in each update.
    pub momentum: f64,
}

impl BatchNorm {
    pub const DEFAULT_EPS: f64 = 1e-5;
    pub const DEFAULT_MOMENTUM: f64 = 0.9;

    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, channels: usize) -> Self {
        let gamma = store.add(format!("{name}.gamma"), Tensor::full(&[channels], T::one()));
        let beta = store.add(format!("{name}.beta"), Tensor::zeros(&[channels]));
        BatchNorm {
            channels,
            gamma,
            beta,
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            eps: Self::DEFAULT_EPS,
            momentum: Self::DEFAULT_MOMENTUM,
        }
    }

    /// Train mode normalises with batch statistics and folds them into the
    /// running averages; eval mode is a fixed affine map.
    pub fn forward<T: Scalar>(
        &mut self,
        tape: &mut Tape<T>,
        p: &Bound,
        x: Var,
        mode: Mode,
    ) -> Result<Var> {
        let (y, stats) = self.forward_stats(tape, p, x, mode)?;
        if let Some(s) = stats {
            self.update(&s);
        }
        Ok(y)
    }

    /// Like [`BatchNorm::forward`] but hands the batch statistics back
    /// instead of applying them, so the layer can stay borrowed immutably.
    pub fn forward_stats<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        p: &Bound,
        x: Var,
        mode: Mode,
    ) -> Result<(Var, Option<BatchStats>)> {
        match mode {
            Mode::Train => {
                let (y, mean, var) =
                    tape.batch_norm(x, p.var(self.gamma), p.var(self.beta), self.eps, None)?;
                let shape = tape.shape(x);
                let count = shape[0] * shape[2..].iter().product::<usize>();
                Ok((y, Some(BatchStats { mean, var, count })))
            }
            Mode::Eval => Ok((self.forward_eval(tape, p, x)?, None)),
        }
    }

    /// Folds one batch into the running mean and (unbiased) variance.
    pub fn update(&mut self, s: &BatchStats) {
        let n = s.count as f64;
        let unbias = if n > 1.0 { n / (n - 1.0) } else { 1.0 };
        for c in 0..self.channels {
            self.running_mean[c] =
                self.momentum * self.running_mean[c] + (1.0 - self.momentum) * s.mean[c];
            self.running_var[c] =
                self.momentum * self.running_var[c] + (1.0 - self.momentum) * s.var[c] * unbias;
        }
    }

    /// Inference with running statistics; does not mutate the layer.
    pub fn forward_eval<T: Scalar>(&self, tape: &mut Tape<T>, p: &Bound, x: Var) -> Result<Var> {
        let (y, _, _) = tape.batch_norm(
            x,
            p.var(self.gamma),
            p.var(self.beta),
            self.eps,
            Some((&self.running_mean, &self.running_var)),
        )?;
        Ok(y)
    }
}
