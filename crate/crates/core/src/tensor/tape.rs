use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`]. Only meaningful for the tape
/// that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// What a backward rule gets to see.
pub struct BackwardCtx<'a, T: Scalar> {
    pub inputs: Vec<&'a Tensor<T>>,
    pub output: &'a Tensor<T>,
    pub needs_grad: Vec<bool>,
}

/// Vector-Jacobian product for one recorded primitive. Returns one entry per
/// input; `None` where `needs_grad` is false.
pub trait BackwardOp<T: Scalar>: Send {
    fn name(&self) -> &'static str;
    fn backward(&self, ctx: &BackwardCtx<'_, T>, grad_out: &[T]) -> Vec<Option<Vec<T>>>;
}

struct Node<T: Scalar> {
    value: Tensor<T>,
    inputs: Vec<Var>,
    op: Option<Box<dyn BackwardOp<T>>>,
}

/// Append-only record of primitive operations. Every entry's inputs precede
/// it, so reverse index order is a valid reverse topological order.
pub struct Tape<T: Scalar = f64> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds an input or parameter. Its `requires_grad` flag is kept.
    pub fn leaf(&mut self, t: Tensor<T>) -> Var {
        self.nodes.push(Node {
            value: t,
            inputs: Vec::new(),
            op: None,
        });
        Var(self.nodes.len() - 1)
    }

    /// Adds a value that never receives a gradient.
    pub fn constant(&mut self, mut t: Tensor<T>) -> Var {
        t.requires_grad = false;
        self.leaf(t)
    }

    /// Records the output of a primitive. The output requires grad iff any
    /// input does; otherwise the backward rule is dropped.
    pub fn record<O: BackwardOp<T> + 'static>(
        &mut self,
        mut value: Tensor<T>,
        inputs: &[Var],
        op: O,
    ) -> Var {
        let requires = inputs.iter().any(|v| self.nodes[v.0].value.requires_grad);
        value.requires_grad = requires;
        value.grad = None;
        self.nodes.push(Node {
            value,
            inputs: inputs.to_vec(),
            op: if requires { Some(Box::new(op)) } else { None },
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn grad(&self, v: Var) -> Option<&[T]> {
        self.nodes[v.0].value.grad.as_deref()
    }

    pub fn take_grad(&mut self, v: Var) -> Option<Vec<T>> {
        self.nodes[v.0].value.grad.take()
    }

    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.value.grad = None;
        }
    }

    /// Reverse sweep from a scalar `loss`. Gradients are added to whatever
    /// is already stored, so calling twice without [`Tape::zero_grad`]
    /// accumulates.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if loss.0 >= self.nodes.len() {
            return Err(Error::Contract(format!(
                "loss var {} is not on this tape",
                loss.0
            )));
        }
        let numel = self.nodes[loss.0].value.numel();
        if numel != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.nodes[loss.0].value.shape()
            )));
        }
        if !self.nodes[loss.0].value.requires_grad {
            return Ok(());
        }

        let mut pending: Vec<Option<Vec<T>>> = (0..=loss.0).map(|_| None).collect();
        pending[loss.0] = Some(vec![T::one()]);

        for i in (0..=loss.0).rev() {
            let Some(g) = pending[i].take() else { continue };
            let node = &self.nodes[i];
            if let Some(op) = &node.op {
                let ctx = BackwardCtx {
                    inputs: node.inputs.iter().map(|v| &self.nodes[v.0].value).collect(),
                    output: &node.value,
                    needs_grad: node
                        .inputs
                        .iter()
                        .map(|v| self.nodes[v.0].value.requires_grad)
                        .collect(),
                };
                let contributions = op.backward(&ctx, &g);
                debug_assert_eq!(contributions.len(), node.inputs.len(), "{}", op.name());
                let inputs = node.inputs.clone();
                for (input, contrib) in inputs.into_iter().zip(contributions) {
                    let Some(c) = contrib else { continue };
                    match &mut pending[input.0] {
                        Some(acc) => acc.iter_mut().zip(&c).for_each(|(a, &b)| *a += b),
                        slot @ None => *slot = Some(c),
                    }
                }
            }
            let value = &mut self.nodes[i].value;
            match &mut value.grad {
                Some(buf) => buf.iter_mut().zip(&g).for_each(|(a, &b)| *a += b),
                None => value.grad = Some(g),
            }
        }
        Ok(())
    }
}
