//! Central finite differences against the tape, at f64.

#![allow(dead_code)]

use csi_lab::nn::{BatchNorm, Conv2d, Dense, Mode, ParamStore};
use csi_lab::polardensenet::{PolarDenseNet, PolarDenseNetConfig};
use csi_lab::tensor::{Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EPS: f64 = 1e-5;
pub const TOL: f64 = 1e-4;

pub fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let n = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

/// `sum(y * r)` for a fixed pseudo-random `r`, so every output entry carries
/// a distinct weight.
pub fn weighted_sum(tape: &mut Tape<f64>, y: Var) -> Var {
    let shape = tape.shape(y).to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let r = tape.constant(random(&shape, &mut rng));
    let p = tape.mul(y, r).unwrap();
    tape.sum(p)
}

pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Report {
    pub checked: usize,
    pub worst: f64,
}

impl Report {
    pub fn merge(self, other: Report) -> Report {
        Report {
            checked: self.checked + other.checked,
            worst: self.worst.max(other.worst),
        }
    }
}

/// Compares analytic and numeric gradients of `f` with respect to every
/// input, probing at most `per_input` coordinates of each.
pub fn check<F>(inputs: &[Tensor<f64>], per_input: usize, f: F) -> Report
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Var,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone().with_grad())).collect();
    let loss = f(&mut tape, &vars);
    tape.backward(loss).unwrap();
    let grads: Vec<Vec<f64>> = vars.iter().map(|&v| tape.grad(v).unwrap().to_vec()).collect();

    let eval = |ins: &[Tensor<f64>]| {
        let mut t = Tape::new();
        let vs: Vec<Var> = ins.iter().map(|x| t.constant(x.clone())).collect();
        let l = f(&mut t, &vs);
        t.value(l).item()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut report = Report { checked: 0, worst: 0.0 };
    for (i, input) in inputs.iter().enumerate() {
        let n = input.numel();
        let coords: Vec<usize> = if n <= per_input {
            (0..n).collect()
        } else {
            (0..per_input).map(|_| rng.gen_range(0..n)).collect()
        };
        for j in coords {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[j] += EPS;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[j] -= EPS;
            let numeric = (eval(&plus) - eval(&minus)) / (2.0 * EPS);
            let e = rel_err(grads[i][j], numeric);
            assert!(
                e < TOL,
                "input {i} coord {j}: analytic {} numeric {numeric} rel {e}",
                grads[i][j]
            );
            report.worst = report.worst.max(e);
            report.checked += 1;
        }
    }
    report
}


pub fn elementwise_and_shape_ops() -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random(&[3, 4], &mut rng);
    let b = random(&[3, 4], &mut rng);
    let r = check(&[a, b], 12, |t, v| {
        let s = t.add(v[0], v[1]).unwrap();
        let d = t.sub(s, v[1]).unwrap();
        let m = t.mul(d, v[1]).unwrap();
        let sc = t.scale(m, 1.7);
        let c = t.concat(&[sc, v[0]], 1).unwrap();
        let sl = t.slice(c, 1, 2, 5).unwrap();
        let rs = t.reshape(sl, &[5, 3]).unwrap();
        let tr = t.transpose(rs).unwrap();
        let y = t.sigmoid(tr);
        let me = t.mean(y);
        let ws = weighted_sum(t, tr);
        t.add(me, ws).unwrap()
    });
    assert_eq!(r.checked, 24);
    r
}

pub fn matmul_and_dense() -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut store = ParamStore::<f64>::new();
    let layer = Dense::new(&mut store, "d", 6, 5, &mut rng);
    let x = random(&[4, 6], &mut rng);
    let mut inputs = vec![x];
    inputs.extend(store.tensors().iter().cloned());
    inputs[2] = random(&[5], &mut rng);
    let r = check(&inputs, 30, |t, v| {
        let y = t.matmul(v[0], v[1]).unwrap();
        let y = t.add_bias(y, v[2]).unwrap();
        let y = t.lrelu(y, 0.3);
        weighted_sum(t, y)
    });
    assert_eq!(layer.outputs, 5);
    assert!(r.checked >= 24 + 30 + 5);
    r
}

pub fn conv2d_kernels() -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut total = Report::default();
    for &(cin, cout, h, w, kh, kw) in &[
        (2, 3, 8, 5, 8, 1),
        (3, 2, 4, 8, 1, 8),
        (4, 3, 5, 6, 3, 3),
        (2, 2, 3, 3, 1, 1),
        (1, 2, 5, 4, 2, 4),
    ] {
        let x = random(&[3, cin, h, w], &mut rng);
        let wt = random(&[cout, cin, kh, kw], &mut rng);
        let b = random(&[cout], &mut rng);
        let r = check(&[x, wt, b], 25, |t, v| {
            let y = t.conv2d(v[0], v[1], v[2]).unwrap();
            weighted_sum(t, y)
        });
        total = total.merge(r);
    }
    assert!(total.checked >= 100);
    total
}

pub fn conv_layer_with_many_samples_spans_groups() -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut store = ParamStore::<f64>::new();
    let conv = Conv2d::new(&mut store, "c", 2, 3, (3, 3), &mut rng);
    let x = random(&[70, 2, 4, 3], &mut rng);
    let mut inputs = vec![x];
    inputs.extend(store.tensors().iter().cloned());
    let r = check(&inputs, 40, |t, v| {
        let y = t.conv2d(v[0], v[1], v[2]).unwrap();
        weighted_sum(t, y)
    });
    assert_eq!(conv.out_channels, 3);
    r
}

pub fn batch_norm_train_and_eval() -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random(&[4, 3, 2, 5], &mut rng);
    let g = random(&[3], &mut rng);
    let b = random(&[3], &mut rng);
    let train = check(&[x.clone(), g.clone(), b.clone()], 40, |t, v| {
        let (y, _, _) = t.batch_norm(v[0], v[1], v[2], BatchNorm::DEFAULT_EPS, None).unwrap();
        weighted_sum(t, y)
    });
    let mean = [0.1, -0.2, 0.3];
    let var = [0.5, 1.5, 2.0];
    let eval = check(&[x, g, b], 40, |t, v| {
        let (y, _, _) = t
            .batch_norm(v[0], v[1], v[2], BatchNorm::DEFAULT_EPS, Some((&mean, &var)))
            .unwrap();
        weighted_sum(t, y)
    });
    train.merge(eval)
}

pub fn mse_and_column_normalization() -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let p = random(&[3, 2, 4, 3], &mut rng);
    let q = random(&[3, 2, 4, 3], &mut rng);
    check(&[p, q], 36, |t, v| {
        let y = t.normalize_columns(v[0]).unwrap();
        t.mse_loss(y, v[1]).unwrap()
    })
}

pub fn full_autoencoder_without_quantizer() -> Report {
    let mut cfg = PolarDenseNetConfig::new(8, 4, 0.25).unwrap();
    cfg.quantize = false;
    let model = PolarDenseNet::<f64>::new(cfg, 11).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = random(&[3, 2, 8, 4], &mut rng);
    let target = random(&[3, 2, 8, 4], &mut rng);

    let loss_of = |store: &ParamStore<f64>, tape: &mut Tape<f64>, with_grad: bool| {
        let p = if with_grad { store.bind(tape) } else { store.bind_frozen(tape) };
        let xv = tape.constant(x.clone());
        let tv = tape.constant(target.clone());
        let (f, _) = model.forward(tape, &p, xv, Mode::Train).unwrap();
        let l = tape.mse_loss(f.output, tv).unwrap();
        (p, l)
    };

    let mut store = model.params.clone();
    let mut tape = Tape::new();
    let (bound, loss) = loss_of(&store, &mut tape, true);
    tape.backward(loss).unwrap();
    store.collect_grads(&mut tape, &bound);
    let grads: Vec<Vec<f64>> = store
        .tensors()
        .iter()
        .map(|t| t.grad.clone().unwrap_or_else(|| vec![0.0; t.numel()]))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut report = Report::default();
    let mut params = model.params.clone();
    for i in 0..params.len() {
        let n = params.tensors()[i].numel();
        for _ in 0..4 {
            let j = rng.gen_range(0..n);
            let orig = params.tensors()[i].data()[j];
            let eval = |v: f64, params: &mut ParamStore<f64>| {
                params.tensors_mut()[i].data_mut()[j] = v;
                let mut t = Tape::new();
                let (_, l) = loss_of(params, &mut t, false);
                t.value(l).item()
            };
            let numeric = (eval(orig + EPS, &mut params) - eval(orig - EPS, &mut params)) / (2.0 * EPS);
            params.tensors_mut()[i].data_mut()[j] = orig;
            let e = rel_err(grads[i][j], numeric);
            // Gradients at the roundoff floor (e.g. conv biases ahead of batch
            // norm, which are exactly zero) are compared absolutely.
            let abs = (grads[i][j] - numeric).abs();
            assert!(
                e < TOL || abs < 1e-7,
                "{} [{j}]: analytic {} numeric {numeric}",
                params.names()[i],
                grads[i][j]
            );
            if e >= TOL {
                // Roundoff floor: the worst-case figure tracks the absolute gap.
                report.worst = report.worst.max(abs);
            } else {
                report.worst = report.worst.max(e);
            }
            report.checked += 1;
        }
    }
    assert!(report.checked >= 100, "only {} coordinates", report.checked);
    report
}
