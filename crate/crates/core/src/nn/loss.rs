use crate::error::{Error, Result};
use crate::tensor::{BackwardCtx, BackwardOp, Scalar, Tape, Tensor, Var};

struct Mse {
    batch: usize,
}

impl<T: Scalar> BackwardOp<T> for Mse {
    fn name(&self) -> &'static str {
        "mse"
    }
    fn backward(&self, ctx: &BackwardCtx<'_, T>, g: &[T]) -> Vec<Option<Vec<T>>> {
        let (p, t) = (ctx.inputs[0].data(), ctx.inputs[1].data());
        let k = g[0] * T::from_f64(2.0 / self.batch as f64);
        let dp: Vec<T> = p.iter().zip(t).map(|(&p, &t)| k * (p - t)).collect();
        let dt = ctx.needs_grad[1].then(|| dp.iter().map(|&v| -v).collect());
        vec![ctx.needs_grad[0].then_some(dp), dt]
    }
}

impl<T: Scalar> Tape<T> {
    /// Squared Frobenius distance per sample, averaged over the leading
    /// (batch) axis.
    pub fn mse_loss(&mut self, pred: Var, target: Var) -> Result<Var> {
        let (ps, ts) = (self.shape(pred), self.shape(target));
        if ps != ts {
            return Err(Error::dim("mse_loss", ps, ts));
        }
        let batch = ps[0];
        let sum: f64 = self
            .value(pred)
            .data()
            .iter()
            .zip(self.value(target).data())
            .map(|(&p, &t)| (p - t).as_f64().powi(2))
            .sum();
        let t = Tensor::scalar(T::from_f64(sum / batch as f64));
        Ok(self.record(t, &[pred, target], Mse { batch }))
    }
}
