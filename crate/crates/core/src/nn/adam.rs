use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Adam moment buffers for one parameter list.
#[derive(Clone, Debug)]
pub struct AdamState<T: Scalar> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &[Tensor<T>]) -> Self {
        Self::with_hyper(params, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyper(params: &[Tensor<T>], beta1: f64, beta2: f64, eps: f64) -> Self {
        AdamState {
            beta1,
            beta2,
            eps,
            step: 0,
            m: params.iter().map(|p| vec![T::zero(); p.numel()]).collect(),
            v: params.iter().map(|p| vec![T::zero(); p.numel()]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update using each parameter's `grad` buffer.
    /// Parameters with `requires_grad == false` are skipped.
    pub fn step(&mut self, params: &mut [Tensor<T>], lr: f64) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::Contract(format!(
                "optimizer tracks {} parameters, got {}",
                self.m.len(),
                params.len()
            )));
        }
        for (i, p) in params.iter().enumerate() {
            if p.requires_grad && p.grad.is_none() {
                return Err(Error::Contract(format!("parameter {i} has no gradient")));
            }
            if p.numel() != self.m[i].len() {
                return Err(Error::Contract(format!("parameter {i} changed size")));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (T::from_f64(self.beta1), T::from_f64(self.beta2));
        let c1 = T::from_f64(1.0 / (1.0 - self.beta1.powi(t)));
        let c2 = T::from_f64(1.0 / (1.0 - self.beta2.powi(t)));
        let lr = T::from_f64(lr);
        let eps = T::from_f64(self.eps);
        let one = T::one();
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            if !p.requires_grad {
                continue;
            }
            let g = p.grad.take().expect("checked above");
            for (((w, &g), m), v) in p.data_mut().iter_mut().zip(&g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                let mh = *m * c1;
                let vh = *v * c2;
                *w -= lr * mh / (vh.sqrt() + eps);
            }
            p.grad = Some(g);
        }
        Ok(())
    }
}
