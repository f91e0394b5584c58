//! Primitive differentiable operations on the tape.

use super::{gemm, BackwardCtx, BackwardOp, Scalar, Tape, Tensor, Var};
use crate::error::{Error, Result};

fn check_same(op: &'static str, a: &[usize], b: &[usize]) -> Result<()> {
    if a != b {
        return Err(Error::dim(op, a, b));
    }
    Ok(())
}

/// `[outer, axis, inner]` view of a shape around `axis`.
fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

struct MatMul {
    m: usize,
    k: usize,
    n: usize,
}

impl<T: Scalar> BackwardOp<T> for MatMul {
    fn name(&self) -> &'static str {
        "matmul"
    }
    fn backward(&self, ctx: &BackwardCtx<'_, T>, g: &[T]) -> Vec<Option<Vec<T>>> {
        let (m, k, n) = (self.m, self.k, self.n);
        let a = ctx.inputs[0].data();
        let b = ctx.inputs[1].data();
        let da = ctx.needs_grad[0].then(|| {
            let mut da = vec![T::zero(); m * k];
            gemm(m, n, k, g, false, b, true, T::zero(), &mut da);
            da
        });
        let db = ctx.needs_grad[1].then(|| {
            let mut db = vec![T::zero(); k * n];
            gemm(k, m, n, a, true, g, false, T::zero(), &mut db);
            db
        });
        vec![da, db]
    }
}

#[derive(Clone, Copy)]
enum Binary {
    Add,
    Sub,
    Mul,
}

impl<T: Scalar> BackwardOp<T> for Binary {
    fn name(&self) -> &'static str {
        match self {
            Binary::Add => "add",
            Binary::Sub => "sub",
            Binary::Mul => "mul",
        }
    }
    fn backward(&self, ctx: &BackwardCtx<'_, T>, g: &[T]) -> Vec<Option<Vec<T>>> {
        let a = ctx.inputs[0].data();
        let b = ctx.inputs[1].data();
        let (ga, gb) = match self {
            Binary::Add => (
                ctx.needs_grad[0].then(|| g.to_vec()),
                ctx.needs_grad[1].then(|| g.to_vec()),
            ),
            Binary::Sub => (
                ctx.needs_grad[0].then(|| g.to_vec()),
                ctx.needs_grad[1].then(|| g.iter().map(|&x| -x).collect()),
            ),
            Binary::Mul => (
                ctx.needs_grad[0].then(|| g.iter().zip(b).map(|(&g, &b)| g * b).collect()),
                ctx.needs_grad[1].then(|| g.iter().zip(a).map(|(&g, &a)| g * a).collect()),
            ),
        };
        vec![ga, gb]
    }
}

struct Scale<T>(T);

impl<T: Scalar> BackwardOp<T> for Scale<T> {
    fn name(&self) -> &'static str {
        "scale"
    }
    fn backward(&self, _ctx: &BackwardCtx<'_, T>, g: &[T]) -> Vec<Option<Vec<T>>> {
        vec![Some(g.iter().map(|&x| x * self.0).collect())]
    }
}

struct Concat {
    axis: usize,
}

impl<T: Scalar> BackwardOp<T> for Concat {
    fn name(&self) -> &'static str {
        "concat"
    }
    fn backward(&self, ctx: &BackwardCtx<'_, T>, g: &[T]) -> Vec<Option<Vec<T>>> {
        let (outer, total, inner) = split_axis(ctx.output.shape(), self.axis);
        let mut offset = 0;
        let mut out = Vec::with_capacity(ctx.inputs.len());
        for (t, &need) in ctx.inputs.iter().zip(&ctx.needs_grad) {
            let len = t.shape()[self.axis];
            if need {
                let mut gi = Vec::with_capacity(t.numel());
                for o in 0..outer {
                    let start = (o * total + offset) * inner;
                    gi.extend_from_slice(&g[start..start + len * inner]);
                }
                out.push(Some(gi));
            } else {
                out.push(None);
            }
            offset += len;
        }
        out
    }
}

struct Slice {
    axis: usize,
    start: usize,
    len: usize,
}

impl<T: Scalar> BackwardOp<T> for Slice {
    fn name(&self) -> &'static str {
        "slice"
    }
    fn backward(&self, ctx: &BackwardCtx<'_, T>, g: &[T]) -> Vec<Option<Vec<T>>> {
        let input = ctx.inputs[0];
        let (outer, total, inner) = split_axis(input.shape(), self.axis);
        let mut gi = vec![T::zero(); input.numel()];
        let chunk = self.len * inner;
        for o in 0..outer {
            let dst = (o * total + self.start) * inner;
            gi[dst..dst + chunk].copy_from_slice(&g[o * chunk..(o + 1) * chunk]);
        }
        vec![Some(gi)]
    }
}

struct Reshape;

impl<T: Scalar> BackwardOp<T> for Reshape {
    fn name(&self) -> &'static str {
        "reshape"
    }
    fn backward(&self, _ctx: &BackwardCtx<'_, T>, g: &[T]) -> Vec<Option<Vec<T>>> {
        vec![Some(g.to_vec())]
    }
}

fn transpose2<T: Copy>(data: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(data.len());
    for c in 0..cols {
        for r in 0..rows {
            out.push(data[r * cols + c]);
        }
    }
    out
}

struct Transpose {
    rows: usize,
    cols: usize,
}

impl<T: Scalar> BackwardOp<T> for Transpose {
    fn name(&self) -> &'static str {
        "transpose"
    }
    fn backward(&self, _ctx: &BackwardCtx<'_, T>, g: &[T]) -> Vec<Option<Vec<T>>> {
        // g is cols x rows
        vec![Some(transpose2(g, self.cols, self.rows))]
    }
}

struct Reduce {
    mean: bool,
}

impl<T: Scalar> BackwardOp<T> for Reduce {
    fn name(&self) -> &'static str {
        if self.mean {
            "mean"
        } else {
            "sum"
        }
    }
    fn backward(&self, ctx: &BackwardCtx<'_, T>, g: &[T]) -> Vec<Option<Vec<T>>> {
        let n = ctx.inputs[0].numel();
        let v = if self.mean {
            g[0] / T::from_f64(n as f64)
        } else {
            g[0]
        };
        vec![Some(vec![v; n])]
    }
}

/// `x[b, j] + bias[j]` with the bias broadcast over every leading index.
struct AddBias {
    width: usize,
}

impl<T: Scalar> BackwardOp<T> for AddBias {
    fn name(&self) -> &'static str {
        "add_bias"
    }
    fn backward(&self, ctx: &BackwardCtx<'_, T>, g: &[T]) -> Vec<Option<Vec<T>>> {
        let gx = ctx.needs_grad[0].then(|| g.to_vec());
        let gb = ctx.needs_grad[1].then(|| {
            let mut gb = vec![T::zero(); self.width];
            for row in g.chunks(self.width) {
                gb.iter_mut().zip(row).for_each(|(a, &b)| *a += b);
            }
            gb
        });
        vec![gx, gb]
    }
}

impl<T: Scalar> Tape<T> {
    /// `[m, k] x [k, n] -> [m, n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::dim("matmul", sa, sb));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut out = vec![T::zero(); m * n];
        gemm(
            m,
            k,
            n,
            self.value(a).data(),
            false,
            self.value(b).data(),
            false,
            T::zero(),
            &mut out,
        );
        let t = Tensor::new(vec![m, n], out)?;
        Ok(self.record(t, &[a, b], MatMul { m, k, n }))
    }

    fn binary(&mut self, a: Var, b: Var, kind: Binary) -> Result<Var> {
        let name = <Binary as BackwardOp<T>>::name(&kind);
        check_same(name, self.shape(a), self.shape(b))?;
        let (x, y) = (self.value(a).data(), self.value(b).data());
        let data: Vec<T> = match kind {
            Binary::Add => x.iter().zip(y).map(|(&p, &q)| p + q).collect(),
            Binary::Sub => x.iter().zip(y).map(|(&p, &q)| p - q).collect(),
            Binary::Mul => x.iter().zip(y).map(|(&p, &q)| p * q).collect(),
        };
        let t = Tensor::new(self.shape(a).to_vec(), data)?;
        Ok(self.record(t, &[a, b], kind))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, Binary::Add)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, Binary::Sub)
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, Binary::Mul)
    }

    pub fn scale(&mut self, a: Var, s: T) -> Var {
        let src = self.value(a);
        let t = Tensor {
            shape: src.shape().to_vec(),
            data: src.data().iter().map(|&x| x * s).collect(),
            grad: None,
            requires_grad: false,
        };
        self.record(t, &[a], Scale(s))
    }

    /// Concatenates along `axis`; every other extent must agree.
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(Error::Contract("concat of zero tensors".into()));
        };
        let base = self.shape(first).to_vec();
        if axis >= base.len() {
            return Err(Error::Axis {
                op: "concat",
                axis,
                rank: base.len(),
            });
        }
        let mut total = 0;
        for &p in parts {
            let s = self.shape(p);
            let compatible = s.len() == base.len()
                && s.iter()
                    .zip(&base)
                    .enumerate()
                    .all(|(i, (a, b))| i == axis || a == b);
            if !compatible {
                return Err(Error::dim("concat", &base, s));
            }
            total += s[axis];
        }
        let mut shape = base.clone();
        shape[axis] = total;
        let (outer, _, inner) = split_axis(&base, axis);
        let mut data = Vec::with_capacity(shape.iter().product());
        for o in 0..outer {
            for &p in parts {
                let t = self.value(p);
                let chunk = t.shape()[axis] * inner;
                data.extend_from_slice(&t.data()[o * chunk..(o + 1) * chunk]);
            }
        }
        let t = Tensor::new(shape, data)?;
        Ok(self.record(t, parts, Concat { axis }))
    }

    /// `len` entries starting at `start` along `axis`.
    pub fn slice(&mut self, a: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        if axis >= shape.len() {
            return Err(Error::Axis {
                op: "slice",
                axis,
                rank: shape.len(),
            });
        }
        if len == 0 || start + len > shape[axis] {
            return Err(Error::Contract(format!(
                "slice [{start}, {}) out of range for extent {} on axis {axis}",
                start + len,
                shape[axis]
            )));
        }
        let (outer, total, inner) = split_axis(&shape, axis);
        let src = self.value(a).data();
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let s = (o * total + start) * inner;
            data.extend_from_slice(&src[s..s + len * inner]);
        }
        let mut out_shape = shape;
        out_shape[axis] = len;
        let t = Tensor::new(out_shape, data)?;
        Ok(self.record(t, &[a], Slice { axis, start, len }))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let src = self.value(a);
        let numel: usize = shape.iter().product();
        if numel != src.numel() {
            return Err(Error::dim("reshape", src.shape(), shape));
        }
        let t = Tensor::new(shape.to_vec(), src.data().to_vec())?;
        Ok(self.record(t, &[a], Reshape))
    }

    /// 2-D transpose.
    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let s = self.shape(a).to_vec();
        if s.len() != 2 {
            return Err(Error::Contract(format!(
                "transpose expects a matrix, got shape {s:?}"
            )));
        }
        let (rows, cols) = (s[0], s[1]);
        let data = transpose2(self.value(a).data(), rows, cols);
        let t = Tensor::new(vec![cols, rows], data)?;
        Ok(self.record(t, &[a], Transpose { rows, cols }))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s: T = self.value(a).data().iter().copied().sum();
        self.record(Tensor::scalar(s), &[a], Reduce { mean: false })
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let src = self.value(a);
        let s: T = src.data().iter().copied().sum();
        let m = s / T::from_f64(src.numel() as f64);
        self.record(Tensor::scalar(m), &[a], Reduce { mean: true })
    }

    /// Adds a 1-D bias along the last axis, broadcast over leading axes.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let xs = self.shape(x).to_vec();
        let bs = self.shape(bias);
        let width = *xs.last().unwrap_or(&0);
        if bs.len() != 1 || bs[0] != width {
            return Err(Error::dim("add_bias", &xs, bs));
        }
        let b = self.value(bias).data();
        let data: Vec<T> = self
            .value(x)
            .data()
            .chunks(width)
            .flat_map(|row| row.iter().zip(b).map(|(&p, &q)| p + q))
            .collect();
        let t = Tensor::new(xs, data)?;
        Ok(self.record(t, &[x, bias], AddBias { width }))
    }
}
