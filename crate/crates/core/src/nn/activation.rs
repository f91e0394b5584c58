use crate::tensor::{BackwardCtx, BackwardOp, Scalar, Tape, Tensor, Var};

struct LeakyRelu<T>(T);

impl<T: Scalar> BackwardOp<T> for LeakyRelu<T> {
    fn name(&self) -> &'static str {
        "lrelu"
    }
    fn backward(&self, ctx: &BackwardCtx<'_, T>, g: &[T]) -> Vec<Option<Vec<T>>> {
        let x = ctx.inputs[0].data();
        // slope 1 at x == 0
        vec![Some(
            g.iter()
                .zip(x)
                .map(|(&g, &x)| if x >= T::zero() { g } else { g * self.0 })
                .collect(),
        )]
    }
}

struct Sigmoid;

impl<T: Scalar> BackwardOp<T> for Sigmoid {
    fn name(&self) -> &'static str {
        "sigmoid"
    }
    fn backward(&self, ctx: &BackwardCtx<'_, T>, g: &[T]) -> Vec<Option<Vec<T>>> {
        let y = ctx.output.data();
        vec![Some(
            g.iter()
                .zip(y)
                .map(|(&g, &y)| g * y * (T::one() - y))
                .collect(),
        )]
    }
}

impl<T: Scalar> Tape<T> {
    pub fn lrelu(&mut self, x: Var, alpha: f64) -> Var {
        let a = T::from_f64(alpha);
        let src = self.value(x);
        let data = src
            .data()
            .iter()
            .map(|&v| if v >= T::zero() { v } else { a * v })
            .collect();
        let t = Tensor::new(src.shape().to_vec(), data).expect("same shape");
        self.record(t, &[x], LeakyRelu(a))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let src = self.value(x);
        let data = src
            .data()
            .iter()
            .map(|&v| T::one() / (T::one() + (-v).exp()))
            .collect();
        let t = Tensor::new(src.shape().to_vec(), data).expect("same shape");
        self.record(t, &[x], Sigmoid)
    }
}
