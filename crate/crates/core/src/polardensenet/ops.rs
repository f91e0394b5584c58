//! Graph operations specific to the autoencoder.

use crate::error::{Error, Result};
use crate::tensor::{BackwardCtx, BackwardOp, Scalar, Tape, Tensor, Var};

/// Quantization grid size for `bits`: `2^bits - 1` steps.
pub fn steps(bits: u32) -> f64 {
    ((1u64 << bits) - 1) as f64
}

/// Level of `x` (clamped to `[0, 1]`) on the uniform grid, rounding halves up.
pub fn level(x: f64, bits: u32) -> u32 {
    let q = steps(bits);
    (x.clamp(0.0, 1.0) * q + 0.5).floor() as u32
}

struct StraightThrough;

impl<T: Scalar> BackwardOp<T> for StraightThrough {
    fn name(&self) -> &'static str {
        "quantize_ste"
    }
    fn backward(&self, _ctx: &BackwardCtx<'_, T>, g: &[T]) -> Vec<Option<Vec<T>>> {
        vec![Some(g.to_vec())]
    }
}

const NORM_FLOOR: f64 = 1e-12;

struct ColumnNorm {
    outer: usize,
    span: usize,
    k: usize,
    norms: Vec<f64>,
}

impl<T: Scalar> BackwardOp<T> for ColumnNorm {
    fn name(&self) -> &'static str {
        "normalize_columns"
    }
    fn backward(&self, ctx: &BackwardCtx<'_, T>, g: &[T]) -> Vec<Option<Vec<T>>> {
        let y = ctx.output.data();
        let mut dx = vec![T::zero(); g.len()];
        let (span, k) = (self.span, self.k);
        for b in 0..self.outer {
            let base = b * span * k;
            for c in 0..k {
                let idx = |r: usize| base + r * k + c;
                let dot: f64 = (0..span).map(|r| (y[idx(r)] * g[idx(r)]).as_f64()).sum();
                let inv = 1.0 / self.norms[b * k + c];
                for r in 0..span {
                    let i = idx(r);
                    dx[i] = T::from_f64((g[i].as_f64() - y[i].as_f64() * dot) * inv);
                }
            }
        }
        vec![Some(dx)]
    }
}

impl<T: Scalar> Tape<T> {
    /// Uniform `bits`-bit quantization of values in `[0, 1]` with an identity
    /// gradient.
    pub fn quantize_ste(&mut self, x: Var, bits: u32) -> Var {
        let q = steps(bits);
        let src = self.value(x);
        let data = src
            .data()
            .iter()
            .map(|&v| T::from_f64(level(v.as_f64(), bits) as f64 / q))
            .collect();
        let t = Tensor::new(src.shape().to_vec(), data).expect("same shape");
        self.record(t, &[x], StraightThrough)
    }

    /// Scales every column `x[b, :, :, k]` of a `[batch, c, n, k]` tensor to
    /// unit Euclidean norm over its `c * n` entries.
    pub fn normalize_columns(&mut self, x: Var) -> Result<Var> {
        let shape = self.shape(x).to_vec();
        if shape.len() != 4 {
            return Err(Error::dim("normalize_columns", &shape, &[0, 0, 0, 0]));
        }
        let (outer, span, k) = (shape[0], shape[1] * shape[2], shape[3]);
        let xd = self.value(x).data();
        let mut norms = vec![0.0; outer * k];
        let mut out = vec![T::zero(); xd.len()];
        for b in 0..outer {
            let base = b * span * k;
            for c in 0..k {
                let s: f64 = (0..span).map(|r| xd[base + r * k + c].as_f64().powi(2)).sum();
                let n = s.sqrt().max(NORM_FLOOR);
                norms[b * k + c] = n;
                for r in 0..span {
                    let i = base + r * k + c;
                    out[i] = T::from_f64(xd[i].as_f64() / n);
                }
            }
        }
        let t = Tensor::new(shape, out)?;
        Ok(self.record(t, &[x], ColumnNorm { outer, span, k, norms }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_and_half() {
        assert_eq!(level(0.0, 2), 0);
        assert_eq!(level(1.0, 2), 3);
        assert_eq!(level(0.5, 2), 2);
        assert_eq!(level(1.2, 2), 3);
        assert_eq!(level(-0.1, 2), 0);
    }

    #[test]
    fn quantizer_error_bound_and_identity_gradient() {
        let xs: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::from_f64(&[xs.len()], &xs).unwrap().with_grad());
        let y = tape.quantize_ste(x, 2);
        let worst = tape
            .value(y)
            .data()
            .iter()
            .zip(&xs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1.0 / 6.0 + 1e-12);
        let s = tape.sum(y);
        tape.backward(s).unwrap();
        assert!(tape.grad(x).unwrap().iter().all(|&g| g == 1.0));
    }

    #[test]
    fn columns_become_unit() {
        let mut tape = Tape::<f64>::new();
        let data: Vec<f64> = (0..2 * 2 * 3 * 4).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = tape.leaf(Tensor::from_f64(&[2, 2, 3, 4], &data).unwrap());
        let y = tape.normalize_columns(x).unwrap();
        let yd = tape.value(y).data();
        for b in 0..2 {
            for c in 0..4 {
                let s: f64 = (0..6).map(|r| yd[b * 24 + r * 4 + c].powi(2)).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }
}
