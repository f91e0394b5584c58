//! Layers, loss, optimizer and learning-rate schedule.

mod activation;
mod adam;
mod batchnorm;
pub mod checkpoint;
mod conv;
mod kernel;
mod dense;
mod loss;
mod schedule;

pub use adam::AdamState;
pub use batchnorm::{BatchNorm, BatchStats};
pub use conv::{conv_padding, Conv2d};
pub use dense::Dense;
pub use schedule::CosineWarmupSchedule;

use rand::Rng;

use crate::tensor::{Scalar, Tape, Tensor, Var};

/// Negative slope of the leaky ReLU used throughout the model.
pub const LRELU_ALPHA: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(pub usize);

/// Owns every trainable tensor of a model, in registration order.
#[derive(Clone, Debug, Default)]
pub struct ParamStore<T: Scalar> {
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore {
            names: Vec::new(),
            tensors: Vec::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, t: Tensor<T>) -> ParamId {
        self.names.push(name.into());
        self.tensors.push(t.with_grad());
        ParamId(self.tensors.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.tensors[id.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    pub fn numel(&self) -> usize {
        self.tensors.iter().map(|t| t.numel()).sum()
    }

    /// Places a copy of every parameter on `tape` as a grad-requiring leaf.
    pub fn bind(&self, tape: &mut Tape<T>) -> Bound {
        Bound(
            self.tensors
                .iter()
                .map(|t| {
                    let mut c = t.clone();
                    c.grad = None;
                    tape.leaf(c)
                })
                .collect(),
        )
    }

    /// Places every parameter on `tape` as a constant (inference only).
    pub fn bind_frozen(&self, tape: &mut Tape<T>) -> Bound {
        Bound(self.tensors.iter().map(|t| tape.constant(t.clone())).collect())
    }

    /// Moves gradients of bound leaves from `tape` into the stored tensors.
    pub fn collect_grads(&mut self, tape: &mut Tape<T>, bound: &Bound) {
        for (t, &v) in self.tensors.iter_mut().zip(&bound.0) {
            t.grad = tape.take_grad(v);
        }
    }

    pub fn zero_grad(&mut self) {
        self.tensors.iter_mut().for_each(Tensor::zero_grad);
    }

    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
        }
    }
}

/// Tape handles for a [`ParamStore`], indexable by [`ParamId`].
#[derive(Clone, Debug)]
pub struct Bound(pub Vec<Var>);

impl Bound {
    pub fn var(&self, id: ParamId) -> Var {
        self.0[id.0]
    }
}

/// Glorot-uniform initialisation.
pub(crate) fn glorot<T: Scalar, R: Rng>(
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    rng: &mut R,
) -> Tensor<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| T::from_f64(rng.gen_range(-limit..limit)))
        .collect();
    Tensor::new(shape.to_vec(), data).expect("glorot shape")
}
