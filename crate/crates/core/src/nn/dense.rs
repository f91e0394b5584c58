use rand::Rng;

use super::{glorot, Bound, ParamId, ParamStore};
use crate::error::Result;
use crate::tensor::{Scalar, Tape, Tensor, Var};

/// Fully connected layer, `[batch, inputs] -> [batch, outputs]`.
#[derive(Clone, Debug)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Dense {
    pub fn new<T: Scalar, R: Rng>(
        store: &mut ParamStore<T>,
        name: &str,
        inputs: usize,
        outputs: usize,
        rng: &mut R,
    ) -> Self {
        let weight = store.add(
            format!("{name}.weight"),
            glorot(&[inputs, outputs], inputs, outputs, rng),
        );
        let bias = store.add(format!("{name}.bias"), Tensor::zeros(&[outputs]));
        Dense {
            inputs,
            outputs,
            weight,
            bias,
        }
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, p: &Bound, x: Var) -> Result<Var> {
        let y = tape.matmul(x, p.var(self.weight))?;
        tape.add_bias(y, p.var(self.bias))
    }
}
