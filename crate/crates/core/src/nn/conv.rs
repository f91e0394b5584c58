//! Zero-padded 2-D cross-correlation that preserves spatial extents.

use rand::Rng;

use super::{glorot, Bound, ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::par;
use super::kernel::{correlate, weight_grad, Rows};
use crate::tensor::{BackwardCtx, BackwardOp, Scalar, Tape, Tensor, Var};

/// Leading zero padding for a kernel extent; the trailing side gets the rest.
/// Odd kernels pad symmetrically, even kernels put the extra row/column last.
pub fn conv_padding(kernel: usize) -> usize {
    (kernel - 1) / 2
}

#[derive(Clone, Copy, Debug)]
struct Geometry {
    cin: usize,
    cout: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
}

impl Geometry {
    fn hw(&self) -> usize {
        self.h * self.w
    }
    fn kk(&self) -> usize {
        self.kh * self.kw
    }
    /// Padded width.
    fn wp(&self) -> usize {
        self.w + self.kw - 1
    }
    /// Per-channel length of a padded group buffer holding `n` samples,
    /// including the tail read by the last shifted view.
    fn padded_len(&self, n: usize) -> usize {
        ((self.h + self.kh - 1) * self.wp() + self.kw - 1) * n
    }
    /// Per-channel length of a group output buffer (garbage columns included).
    fn out_len(&self, n: usize) -> usize {
        self.h * self.wp() * n
    }
    /// Offsets of every kernel tap, row-major over `(i, j)`.
    fn taps(&self, n: usize) -> Vec<usize> {
        (0..self.kh)
            .flat_map(|i| (0..self.kw).map(move |j| (i, j)))
            .map(|(i, j)| self.shift(i, j, n))
            .collect()
    }
    /// Start of the view shifted by kernel tap `(i, j)`.
    fn shift(&self, i: usize, j: usize, n: usize) -> usize {
        (i * self.wp() + j) * n
    }
}

/// Samples per group. Fixed so that results do not depend on scheduling.
const GROUP: usize = 32;

/// Copies samples `b0..b0 + n` of `[batch, c, h, w]` into a zero-padded
/// `[c, h + kh - 1, w + kw - 1, n]` buffer with row pitch `pitch`.
fn pack<T: Scalar>(g: &Geometry, src: &[T], c: usize, b0: usize, n: usize, pitch: usize) -> Vec<T> {
    let (top, left) = (conv_padding(g.kh), conv_padding(g.kw));
    let (hw, wp) = (g.hw(), g.wp());
    let mut out = vec![T::zero(); c * pitch];
    for ch in 0..c {
        let dst = &mut out[ch * pitch..(ch + 1) * pitch];
        for s in 0..n {
            let plane = &src[((b0 + s) * c + ch) * hw..((b0 + s) * c + ch + 1) * hw];
            for y in 0..g.h {
                let base = (y + top) * wp + left;
                for (x, &v) in plane[y * g.w..(y + 1) * g.w].iter().enumerate() {
                    dst[(base + x) * n + s] = v;
                }
            }
        }
    }
    out
}

/// Lays a `[batch, c, h, w]` gradient out as `[c, h, w + kw - 1, n]` rows of
/// `pitch` elements starting at `front`, zero everywhere else.
fn pack_grad<T: Scalar>(g: &Geometry, src: &[T], b0: usize, n: usize, front: usize, pitch: usize) -> Vec<T> {
    let (hw, wp) = (g.hw(), g.wp());
    let mut out = vec![T::zero(); g.cout * pitch];
    for o in 0..g.cout {
        let dst = &mut out[o * pitch + front..(o + 1) * pitch];
        for s in 0..n {
            let plane = &src[((b0 + s) * g.cout + o) * hw..((b0 + s) * g.cout + o + 1) * hw];
            for y in 0..g.h {
                for (x, &v) in plane[y * g.w..(y + 1) * g.w].iter().enumerate() {
                    dst[(y * wp + x) * n + s] = v;
                }
            }
        }
    }
    out
}

/// Reads a `[c, rows, wp, n]` buffer back into per-sample `[c, h, w]` planes
/// starting at padded offset `(top, left)`, adding `bias[c]` if given.
#[allow(clippy::too_many_arguments)]
fn unpack<T: Scalar>(
    g: &Geometry,
    buf: &[T],
    c: usize,
    pitch: usize,
    (top, left): (usize, usize),
    n: usize,
    bias: Option<&[T]>,
    dst: &mut [T],
) {
    let (hw, wp) = (g.hw(), g.wp());
    for ch in 0..c {
        let b = bias.map_or(T::zero(), |b| b[ch]);
        let src = &buf[ch * pitch..(ch + 1) * pitch];
        for s in 0..n {
            let plane = &mut dst[(s * c + ch) * hw..(s * c + ch + 1) * hw];
            for y in 0..g.h {
                let base = (y + top) * wp + left;
                for (x, d) in plane[y * g.w..(y + 1) * g.w].iter_mut().enumerate() {
                    *d = src[(base + x) * n + s] + b;
                }
            }
        }
    }
}

struct Conv2dOp<T> {
    geo: Geometry,
    /// Padded input groups from the forward pass, kept when the weight needs
    /// a gradient.
    packed: Option<Vec<Vec<T>>>,
}

impl<T: Scalar> BackwardOp<T> for Conv2dOp<T> {
    fn name(&self) -> &'static str {
        "conv2d"
    }

    fn backward(&self, ctx: &BackwardCtx<'_, T>, grad: &[T]) -> Vec<Option<Vec<T>>> {
        let g = self.geo;
        let (x, w) = (ctx.inputs[0].data(), ctx.inputs[1].data());
        let hw = g.hw();
        let in_len = g.cin * hw;
        let out_len = g.cout * hw;
        let batch = x.len() / in_len;
        let kk = g.kk();
        let wlen = g.cout * g.cin * kk;
        let (want_dx, want_dw) = (ctx.needs_grad[0], ctx.needs_grad[1]);
        let pad = (conv_padding(g.kh), conv_padding(g.kw));

        // Per-group input gradients and weight-gradient partials; partials are
        // summed in group order so the result does not depend on scheduling.
        let groups = par::map_range(batch.div_ceil(GROUP), |gi| {
            let b0 = gi * GROUP;
            let n = GROUP.min(batch - b0);
            let (pitch, len) = (g.padded_len(n), g.out_len(n));
            let taps = g.taps(n);
            // Output gradient, front-padded so the input gradient is a plain
            // correlation with the transposed kernel.
            let front = g.shift(g.kh - 1, g.kw - 1, n);
            let gpitch = pitch + front;
            let gpad = pack_grad(&g, grad, b0, n, front, gpitch);
            let dx = want_dx.then(|| {
                let back: Vec<usize> = taps.iter().map(|&s| front - s).collect();
                let mut wt = vec![T::zero(); wlen];
                for o in 0..g.cout {
                    for c in 0..g.cin {
                        let (from, to) = ((o * g.cin + c) * kk, (c * g.cout + o) * kk);
                        wt[to..to + kk].copy_from_slice(&w[from..from + kk]);
                    }
                }
                let mut dxp = vec![T::zero(); g.cin * pitch];
                let src = Rows { data: &gpad, pitch: gpitch, count: g.cout };
                correlate(&src, &back, &wt, g.cin, pitch, &mut dxp, pitch);
                let mut dx = vec![T::zero(); n * in_len];
                unpack(&g, &dxp, g.cin, pitch, pad, n, None, &mut dx);
                dx
            });
            let dw = want_dw.then(|| {
                let fresh;
                let xp = match &self.packed {
                    Some(p) => &p[gi],
                    None => {
                        fresh = pack(&g, x, g.cin, b0, n, pitch);
                        &fresh
                    }
                };
                weight_grad(
                    &Rows { data: &gpad[front..], pitch: gpitch, count: g.cout },
                    &Rows { data: xp, pitch, count: g.cin },
                    &taps,
                    len,
                )
            });
            (dx, dw)
        });

        let mut dx = want_dx.then(|| Vec::with_capacity(x.len()));
        let mut dw = want_dw.then(|| vec![T::zero(); wlen]);
        for (gdx, gdw) in groups {
            if let (Some(all), Some(part)) = (dx.as_mut(), gdx) {
                all.extend(part);
            }
            if let (Some(all), Some(part)) = (dw.as_mut(), gdw) {
                all.iter_mut().zip(&part).for_each(|(a, &b)| *a += b);
            }
        }

        let db = ctx.needs_grad[2].then(|| {
            let mut db = vec![T::zero(); g.cout];
            for gb in grad.chunks(out_len) {
                for (o, d) in db.iter_mut().enumerate() {
                    *d += gb[o * hw..(o + 1) * hw].iter().copied().sum::<T>();
                }
            }
            db
        });

        vec![dx, dw, db]
    }
}

impl<T: Scalar> Tape<T> {
    /// `x: [batch, cin, h, w]`, `weight: [cout, cin, kh, kw]`, `bias: [cout]`
    /// to `[batch, cout, h, w]`.
    pub fn conv2d(&mut self, x: Var, weight: Var, bias: Var) -> Result<Var> {
        let xs = self.shape(x).to_vec();
        let ws = self.shape(weight).to_vec();
        if xs.len() != 4 || ws.len() != 4 {
            return Err(Error::dim("conv2d", &xs, &ws));
        }
        if xs[1] != ws[1] {
            return Err(Error::Contract(format!(
                "conv2d: input has {} channels, layer expects {}",
                xs[1], ws[1]
            )));
        }
        if self.shape(bias) != [ws[0]] {
            return Err(Error::dim("conv2d bias", self.shape(bias), &[ws[0]]));
        }
        let geo = Geometry {
            cin: ws[1],
            cout: ws[0],
            h: xs[2],
            w: xs[3],
            kh: ws[2],
            kw: ws[3],
        };
        let batch = xs[0];
        let out_len = geo.cout * geo.hw();
        let xd = self.value(x).data();
        let wd = self.value(weight).data();
        let bd = self.value(bias).data();

        let groups = par::map_range(batch.div_ceil(GROUP), |gi| {
            let (b0, n) = (gi * GROUP, GROUP.min(batch - gi * GROUP));
            let (pitch, len) = (geo.padded_len(n), geo.out_len(n));
            let xp = pack(&geo, xd, geo.cin, b0, n, pitch);
            let mut op = vec![T::zero(); geo.cout * len];
            let src = Rows { data: &xp, pitch, count: geo.cin };
            correlate(&src, &geo.taps(n), wd, geo.cout, len, &mut op, len);
            let mut ob = vec![T::zero(); n * out_len];
            unpack(&geo, &op, geo.cout, len, (0, 0), n, Some(bd), &mut ob);
            (ob, xp)
        });
        let mut out = Vec::with_capacity(batch * out_len);
        let mut packed = Vec::with_capacity(groups.len());
        for (ob, xp) in groups {
            out.extend(ob);
            packed.push(xp);
        }
        let keep = self.value(weight).requires_grad;
        let t = Tensor::new(vec![batch, geo.cout, geo.h, geo.w], out)?;
        Ok(self.record(t, &[x, weight, bias], Conv2dOp { geo, packed: keep.then_some(packed) }))
    }
}

/// Convolution layer whose parameters live in a [`ParamStore`].
#[derive(Clone, Debug)]
pub struct Conv2d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: (usize, usize),
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Conv2d {
    pub fn new<T: Scalar, R: Rng>(
        store: &mut ParamStore<T>,
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
        rng: &mut R,
    ) -> Self {
        let (kh, kw) = kernel;
        let fan_in = in_channels * kh * kw;
        let fan_out = out_channels * kh * kw;
        let weight = store.add(
            format!("{name}.weight"),
            glorot(&[out_channels, in_channels, kh, kw], fan_in, fan_out, rng),
        );
        let bias = store.add(format!("{name}.bias"), Tensor::zeros(&[out_channels]));
        Conv2d {
            in_channels,
            out_channels,
            kernel,
            weight,
            bias,
        }
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, p: &Bound, x: Var) -> Result<Var> {
        tape.conv2d(x, p.var(self.weight), p.var(self.bias))
    }
}
