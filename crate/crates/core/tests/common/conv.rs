//! Direct nested-loop conv2d, forward and backward.

#![allow(dead_code)]

use csi_lab::nn::conv_padding;
use csi_lab::tensor::{Tape, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct Case {
    pub batch: usize,
    pub cin: usize,
    pub cout: usize,
    pub h: usize,
    pub w: usize,
    pub kh: usize,
    pub kw: usize,
}

impl Case {
    pub fn x_len(&self) -> usize {
        self.batch * self.cin * self.h * self.w
    }
    pub fn w_len(&self) -> usize {
        self.cout * self.cin * self.kh * self.kw
    }
    pub fn y_len(&self) -> usize {
        self.batch * self.cout * self.h * self.w
    }
}

/// Input coordinate read by output `(i, j)` through tap `(u, v)`, if inside.
pub fn source(c: &Case, i: usize, j: usize, u: usize, v: usize) -> Option<(usize, usize)> {
    let r = (i + u).checked_sub(conv_padding(c.kh))?;
    let s = (j + v).checked_sub(conv_padding(c.kw))?;
    (r < c.h && s < c.w).then_some((r, s))
}

pub fn naive_forward(c: &Case, x: &[f64], w: &[f64], b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; c.y_len()];
    for n in 0..c.batch {
        for o in 0..c.cout {
            for i in 0..c.h {
                for j in 0..c.w {
                    let mut acc = b[o];
                    for ci in 0..c.cin {
                        for u in 0..c.kh {
                            for v in 0..c.kw {
                                if let Some((r, s)) = source(c, i, j, u, v) {
                                    acc += w[((o * c.cin + ci) * c.kh + u) * c.kw + v]
                                        * x[((n * c.cin + ci) * c.h + r) * c.w + s];
                                }
                            }
                        }
                    }
                    y[((n * c.cout + o) * c.h + i) * c.w + j] = acc;
                }
            }
        }
    }
    y
}

/// Gradients of `sum(y * g)` with respect to x, w and b.
pub fn naive_backward(c: &Case, x: &[f64], w: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut dx = vec![0.0; c.x_len()];
    let mut dw = vec![0.0; c.w_len()];
    let mut db = vec![0.0; c.cout];
    for n in 0..c.batch {
        for o in 0..c.cout {
            for i in 0..c.h {
                for j in 0..c.w {
                    let go = g[((n * c.cout + o) * c.h + i) * c.w + j];
                    db[o] += go;
                    for ci in 0..c.cin {
                        for u in 0..c.kh {
                            for v in 0..c.kw {
                                if let Some((r, s)) = source(c, i, j, u, v) {
                                    let xi = ((n * c.cin + ci) * c.h + r) * c.w + s;
                                    let wi = ((o * c.cin + ci) * c.kh + u) * c.kw + v;
                                    dx[xi] += w[wi] * go;
                                    dw[wi] += x[xi] * go;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    (dx, dw, db)
}

pub fn uniform(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

pub fn cases() -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = vec![
        Case { batch: 3, cin: 2, cout: 8, h: 16, w: 13, kh: 8, kw: 1 },
        Case { batch: 3, cin: 8, cout: 8, h: 16, w: 13, kh: 1, kw: 8 },
        Case { batch: 40, cin: 2, cout: 3, h: 8, w: 4, kh: 8, kw: 1 },
        Case { batch: 33, cin: 3, cout: 2, h: 4, w: 8, kh: 1, kw: 8 },
    ];
    while out.len() < 50 {
        out.push(Case {
            batch: rng.gen_range(1..=36),
            cin: rng.gen_range(1..=5),
            cout: rng.gen_range(1..=5),
            h: rng.gen_range(1..=10),
            w: rng.gen_range(1..=10),
            kh: rng.gen_range(1..=8),
            kw: rng.gen_range(1..=8),
        });
    }
    out
}

/// Forward and all three gradients for 50 configurations; returns the
/// worst absolute deviation.
pub fn oracle_suite() -> f64 {
    let cases = cases();
    assert_eq!(cases.len(), 50);
    assert!(cases.iter().any(|c| (c.kh, c.kw) == (8, 1)));
    assert!(cases.iter().any(|c| (c.kh, c.kw) == (1, 8)));
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for c in &cases {
        let x = uniform(c.x_len(), &mut rng);
        let w = uniform(c.w_len(), &mut rng);
        let b = uniform(c.cout, &mut rng);
        let g = uniform(c.y_len(), &mut rng);

        let mut tape = Tape::<f64>::new();
        let xv = tape.leaf(Tensor::new(vec![c.batch, c.cin, c.h, c.w], x.clone()).unwrap().with_grad());
        let wv = tape.leaf(Tensor::new(vec![c.cout, c.cin, c.kh, c.kw], w.clone()).unwrap().with_grad());
        let bv = tape.leaf(Tensor::new(vec![c.cout], b.clone()).unwrap().with_grad());
        let y = tape.conv2d(xv, wv, bv).unwrap();
        let gv = tape.constant(Tensor::new(vec![c.batch, c.cout, c.h, c.w], g.clone()).unwrap());
        let p = tape.mul(y, gv).unwrap();
        let loss = tape.sum(p);
        tape.backward(loss).unwrap();

        let expect = naive_forward(c, &x, &w, &b);
        let (dx, dw, db) = naive_backward(c, &x, &w, &g);
        for (name, got, want) in [
            ("forward", tape.value(y).data(), &expect[..]),
            ("dx", tape.grad(xv).unwrap(), &dx[..]),
            ("dw", tape.grad(wv).unwrap(), &dw[..]),
            ("db", tape.grad(bv).unwrap(), &db[..]),
        ] {
            let d = max_diff(got, want);
            assert!(d < 1e-10, "{name} {c:?}: max diff {d:e}");
            worst = worst.max(d);
        }
    }
    worst
}

