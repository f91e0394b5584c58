use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::PolarDenseNetConfig;
use super::ops::{level, steps};
use crate::channel::PrecoderChannelMatrix;
use crate::error::{Error, Result};
use crate::nn::checkpoint::{Block, Checkpoint};
use crate::nn::{BatchNorm, BatchStats, Bound, Conv2d, Dense, Mode, ParamStore};
use crate::tensor::{Scalar, Tape, Tensor, Var};

/// Quantized latent: one level in `0..2^beta` per latent value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatentCode {
    pub levels: Vec<u32>,
    pub beta: u32,
}

impl LatentCode {
    pub fn bit_len(&self) -> usize {
        self.levels.len() * self.beta as usize
    }

    /// Packs levels most-significant bit first.
    pub fn to_bits(&self) -> Vec<bool> {
        self.levels
            .iter()
            .flat_map(|&l| (0..self.beta).rev().map(move |b| (l >> b) & 1 == 1))
            .collect()
    }
}

pub fn quantize(latent: &[f64], beta: u32) -> LatentCode {
    LatentCode {
        levels: latent.iter().map(|&x| level(x, beta)).collect(),
        beta,
    }
}

pub fn dequantize(code: &LatentCode) -> Vec<f64> {
    let q = steps(code.beta);
    code.levels.iter().map(|&l| l as f64 / q).collect()
}

#[derive(Clone, Debug)]
struct ConvBn {
    conv: Conv2d,
    bn: usize,
}

#[derive(Clone, Debug)]
struct EncoderPath {
    spatial: ConvBn,
    spectral: ConvBn,
}

#[derive(Clone, Debug)]
struct DenseBlock {
    layers: Vec<ConvBn>,
    transition: Option<ConvBn>,
}

/// Values produced by one pass through the graph.
#[derive(Clone, Copy, Debug)]
pub struct Forward {
    /// Encoder paths for the upper and lower polarization, before
    /// concatenation.
    pub paths: (Var, Var),
    /// Sigmoid latent in `[0, 1]`.
    pub latent: Var,
    /// Latent as seen by the decoder (quantized unless bypassed).
    pub decoder_input: Var,
    /// `[batch, 2, N, K]`, unit columns.
    pub output: Var,
}

/// Polarization-split convolutional autoencoder.
///
/// Input and output are `[batch, 2, N, K]` real/imaginary planes. The
/// antenna axis is split into the two polarizations, each half runs through
/// its own `8x1` / `1x8` convolution path, and the results are stacked on
/// the channel axis so later kernels see both polarizations of an antenna
/// position together.
#[derive(Clone, Debug)]
pub struct PolarDenseNet<T: Scalar> {
    pub cfg: PolarDenseNetConfig,
    pub params: ParamStore<T>,
    pub norms: Vec<BatchNorm>,
    pub norm_names: Vec<String>,
    paths: Vec<EncoderPath>,
    encoder_block: DenseBlock,
    encoder_dense: Dense,
    decoder_dense: Dense,
    decoder_blocks: Vec<DenseBlock>,
    output_conv: Conv2d,
}

struct Builder<'a, T: Scalar> {
    params: &'a mut ParamStore<T>,
    norms: Vec<BatchNorm>,
    norm_names: Vec<String>,
    rng: ChaCha8Rng,
}

impl<T: Scalar> Builder<'_, T> {
    fn conv_bn(&mut self, name: &str, cin: usize, cout: usize, kernel: (usize, usize)) -> ConvBn {
        let conv = Conv2d::new(self.params, name, cin, cout, kernel, &mut self.rng);
        let bn_name = format!("{name}.bn");
        self.norms.push(BatchNorm::new(self.params, &bn_name, cout));
        self.norm_names.push(bn_name);
        ConvBn {
            conv,
            bn: self.norms.len() - 1,
        }
    }

    fn dense_block(&mut self, name: &str, cfg: &PolarDenseNetConfig, transition: bool) -> DenseBlock {
        let c0 = cfg.trunk_channels();
        let g = cfg.growth_channels;
        let layers = (0..cfg.dense_block_layers)
            .map(|i| self.conv_bn(&format!("{name}.conv{i}"), c0 + i * g, g, (3, 3)))
            .collect();
        let transition = transition
            .then(|| self.conv_bn(&format!("{name}.transition"), cfg.block_out_channels(), c0, (1, 1)));
        DenseBlock { layers, transition }
    }
}

impl<T: Scalar> PolarDenseNet<T> {
    pub fn new(cfg: PolarDenseNetConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut params = ParamStore::new();
        let mut b = Builder {
            params: &mut params,
            norms: Vec::new(),
            norm_names: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        let pc = cfg.path_channels;
        let n_paths = if cfg.shared_paths { 1 } else { 2 };
        let paths = (0..n_paths)
            .map(|i| EncoderPath {
                spatial: b.conv_bn(&format!("enc.path{i}.spatial"), 2, pc, (8, 1)),
                spectral: b.conv_bn(&format!("enc.path{i}.spectral"), pc, pc, (1, 8)),
            })
            .collect();
        let encoder_block = b.dense_block("enc.block", &cfg, false);
        let flat = cfg.block_out_channels() * cfg.half() * cfg.k;
        let encoder_dense = Dense::new(b.params, "enc.dense", flat, cfg.latent_dim, &mut b.rng);
        let trunk = cfg.trunk_channels() * cfg.half() * cfg.k;
        let decoder_dense = Dense::new(b.params, "dec.dense", cfg.latent_dim, trunk, &mut b.rng);
        let decoder_blocks = (0..cfg.decoder_blocks)
            .map(|i| b.dense_block(&format!("dec.block{i}"), &cfg, true))
            .collect();
        let output_conv = Conv2d::new(b.params, "dec.out", cfg.trunk_channels(), 4, (3, 3), &mut b.rng);
        let (norms, norm_names) = (b.norms, b.norm_names);
        Ok(PolarDenseNet {
            cfg,
            params,
            norms,
            norm_names,
            paths,
            encoder_block,
            encoder_dense,
            decoder_dense,
            decoder_blocks,
            output_conv,
        })
    }

    fn conv_bn(
        &self,
        l: &ConvBn,
        tape: &mut Tape<T>,
        p: &Bound,
        x: Var,
        mode: Mode,
        stats: &mut Vec<(usize, BatchStats)>,
    ) -> Result<Var> {
        let y = l.conv.forward(tape, p, x)?;
        let (y, s) = self.norms[l.bn].forward_stats(tape, p, y, mode)?;
        if let Some(s) = s {
            stats.push((l.bn, s));
        }
        Ok(tape.lrelu(y, self.cfg.alpha))
    }

    fn dense_block(
        &self,
        block: &DenseBlock,
        tape: &mut Tape<T>,
        p: &Bound,
        x: Var,
        mode: Mode,
        stats: &mut Vec<(usize, BatchStats)>,
    ) -> Result<Var> {
        let mut feats = vec![x];
        for l in &block.layers {
            let input = if feats.len() == 1 { x } else { tape.concat(&feats, 1)? };
            let y = self.conv_bn(l, tape, p, input, mode, stats)?;
            feats.push(y);
        }
        let out = tape.concat(&feats, 1)?;
        match &block.transition {
            Some(t) => self.conv_bn(t, tape, p, out, mode, stats),
            None => Ok(out),
        }
    }

    fn check_input(&self, tape: &Tape<T>, x: Var) -> Result<usize> {
        let s = tape.shape(x);
        let want = [2, self.cfg.n, self.cfg.k];
        if s.len() != 4 || s[1..] != want {
            return Err(Error::dim("polardensenet input", s, &want));
        }
        Ok(s[0])
    }

    /// The two polarization paths.
    pub fn encode_paths(
        &self,
        tape: &mut Tape<T>,
        p: &Bound,
        x: Var,
        mode: Mode,
        stats: &mut Vec<(usize, BatchStats)>,
    ) -> Result<(Var, Var)> {
        self.check_input(tape, x)?;
        let half = self.cfg.half();
        let upper = tape.slice(x, 2, 0, half)?;
        let lower = tape.slice(x, 2, half, half)?;
        let mut run = |i: usize, h: Var, tape: &mut Tape<T>| -> Result<Var> {
            let path = &self.paths[i.min(self.paths.len() - 1)];
            let a = self.conv_bn(&path.spatial, tape, p, h, mode, stats)?;
            self.conv_bn(&path.spectral, tape, p, a, mode, stats)
        };
        let u = run(0, upper, tape)?;
        let l = run(1, lower, tape)?;
        Ok((u, l))
    }

    fn encode_rest(
        &self,
        tape: &mut Tape<T>,
        p: &Bound,
        paths: (Var, Var),
        mode: Mode,
        stats: &mut Vec<(usize, BatchStats)>,
    ) -> Result<Var> {
        let batch = tape.shape(paths.0)[0];
        let joined = tape.concat(&[paths.0, paths.1], 1)?;
        let feats = self.dense_block(&self.encoder_block, tape, p, joined, mode, stats)?;
        let flat_len = self.cfg.block_out_channels() * self.cfg.half() * self.cfg.k;
        let flat = tape.reshape(feats, &[batch, flat_len])?;
        let z = self.encoder_dense.forward(tape, p, flat)?;
        Ok(tape.sigmoid(z))
    }

    /// Latent `[batch, latent_dim]` to output planes `[batch, 2, N, K]`.
    pub fn decode(
        &self,
        tape: &mut Tape<T>,
        p: &Bound,
        z: Var,
        mode: Mode,
        stats: &mut Vec<(usize, BatchStats)>,
    ) -> Result<Var> {
        let zs = tape.shape(z).to_vec();
        if zs.len() != 2 || zs[1] != self.cfg.latent_dim {
            return Err(Error::dim("decode", &zs, &[self.cfg.latent_dim]));
        }
        let batch = zs[0];
        let (c, half, k) = (self.cfg.trunk_channels(), self.cfg.half(), self.cfg.k);
        let y = self.decoder_dense.forward(tape, p, z)?;
        let y = tape.lrelu(y, self.cfg.alpha);
        let mut y = tape.reshape(y, &[batch, c, half, k])?;
        for block in &self.decoder_blocks {
            y = self.dense_block(block, tape, p, y, mode, stats)?;
        }
        let o = self.output_conv.forward(tape, p, y)?;
        let upper = tape.slice(o, 1, 0, 2)?;
        let lower = tape.slice(o, 1, 2, 2)?;
        let planes = tape.concat(&[upper, lower], 2)?;
        tape.normalize_columns(planes)
    }

    /// Full pass. Batch statistics gathered in train mode are returned for
    /// [`PolarDenseNet::apply_stats`].
    pub fn forward(
        &self,
        tape: &mut Tape<T>,
        p: &Bound,
        x: Var,
        mode: Mode,
    ) -> Result<(Forward, Vec<(usize, BatchStats)>)> {
        let mut stats = Vec::new();
        let paths = self.encode_paths(tape, p, x, mode, &mut stats)?;
        let latent = self.encode_rest(tape, p, paths, mode, &mut stats)?;
        let decoder_input = if self.cfg.quantize {
            tape.quantize_ste(latent, self.cfg.beta)
        } else {
            latent
        };
        let output = self.decode(tape, p, decoder_input, mode, &mut stats)?;
        Ok((
            Forward {
                paths,
                latent,
                decoder_input,
                output,
            },
            stats,
        ))
    }

    pub fn apply_stats(&mut self, stats: &[(usize, BatchStats)]) {
        for (i, s) in stats {
            self.norms[*i].update(s);
        }
    }

    /// Stacks samples into `[batch, 2, N, K]`.
    pub fn batch_tensor(&self, samples: &[&PrecoderChannelMatrix]) -> Result<Tensor<T>> {
        let mut data = Vec::with_capacity(samples.len() * 2 * self.cfg.n * self.cfg.k);
        for s in samples {
            if (s.n(), s.k()) != (self.cfg.n, self.cfg.k) {
                return Err(Error::dim("polardensenet input", &[s.n(), s.k()], &[self.cfg.n, self.cfg.k]));
            }
            data.extend(s.to_planes().into_iter().map(T::from_f64));
        }
        Tensor::new(vec![samples.len(), 2, self.cfg.n, self.cfg.k], data)
    }

    /// Splits `[batch, 2, N, K]` planes back into matrices.
    pub fn matrices(&self, t: &Tensor<T>) -> Result<Vec<PrecoderChannelMatrix>> {
        let per = 2 * self.cfg.n * self.cfg.k;
        t.data()
            .chunks_exact(per)
            .map(|c| {
                let v: Vec<f64> = c.iter().map(|x| x.as_f64()).collect();
                PrecoderChannelMatrix::from_planes(self.cfg.n, self.cfg.k, &v)
            })
            .collect()
    }

    /// Eval-mode latent `[0, 1]^latent_dim` of one sample.
    pub fn encode(&self, h: &PrecoderChannelMatrix) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let p = self.params.bind_frozen(&mut tape);
        let x = tape.constant(self.batch_tensor(&[h])?);
        let paths = self.encode_paths(&mut tape, &p, x, Mode::Eval, &mut Vec::new())?;
        let z = self.encode_rest(&mut tape, &p, paths, Mode::Eval, &mut Vec::new())?;
        Ok(tape.value(z).data().iter().map(|v| v.as_f64()).collect())
    }

    pub fn encode_code(&self, h: &PrecoderChannelMatrix) -> Result<LatentCode> {
        Ok(quantize(&self.encode(h)?, self.cfg.beta))
    }

    pub fn decode_latent(&self, latent: &[f64]) -> Result<PrecoderChannelMatrix> {
        let mut tape = Tape::new();
        let p = self.params.bind_frozen(&mut tape);
        let z = tape.constant(Tensor::from_f64(&[1, latent.len()], latent)?);
        let out = self.decode(&mut tape, &p, z, Mode::Eval, &mut Vec::new())?;
        Ok(self.matrices(tape.value(out))?.remove(0))
    }

    pub fn decode_code(&self, code: &LatentCode) -> Result<PrecoderChannelMatrix> {
        if code.levels.len() != self.cfg.latent_dim || code.beta != self.cfg.beta {
            return Err(Error::dim(
                "decode_code",
                &[code.levels.len(), code.beta as usize],
                &[self.cfg.latent_dim, self.cfg.beta as usize],
            ));
        }
        self.decode_latent(&dequantize(code))
    }

    /// Eval-mode reconstruction of `inputs`, in batches.
    pub fn reconstruct(&self, inputs: &[PrecoderChannelMatrix], batch: usize) -> Result<Vec<PrecoderChannelMatrix>> {
        let mut out = Vec::with_capacity(inputs.len());
        for chunk in inputs.chunks(batch.max(1)) {
            let refs: Vec<&PrecoderChannelMatrix> = chunk.iter().collect();
            let mut tape = Tape::new();
            let p = self.params.bind_frozen(&mut tape);
            let x = tape.constant(self.batch_tensor(&refs)?);
            let (f, _) = self.forward(&mut tape, &p, x, Mode::Eval)?;
            out.extend(self.matrices(tape.value(f.output))?);
        }
        Ok(out)
    }
}

impl PolarDenseNet<f32> {
    /// Parameters plus batch-norm running statistics.
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut blocks: Vec<Block> = self
            .params
            .names()
            .iter()
            .zip(self.params.tensors())
            .map(|(name, t)| Block {
                name: name.clone(),
                dims: t.shape().to_vec(),
                data: t.data().to_vec(),
            })
            .collect();
        for (name, bn) in self.norm_names.iter().zip(&self.norms) {
            for (suffix, v) in [("running_mean", &bn.running_mean), ("running_var", &bn.running_var)] {
                blocks.push(Block {
                    name: format!("{name}.{suffix}"),
                    dims: vec![v.len()],
                    data: v.iter().map(|&x| x as f32).collect(),
                });
            }
        }
        Checkpoint {
            arch_hash: self.cfg.arch_hash(),
            gamma: self.cfg.gamma,
            beta: self.cfg.beta,
            n: self.cfg.n as u32,
            k: self.cfg.k as u32,
            blocks,
        }
    }

    /// Rebuilds a model. Layer sizes come from the block shapes and must
    /// reproduce the stored architecture hash.
    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let cfg = infer_config(ck)?;
        if cfg.arch_hash() != ck.arch_hash {
            return Err(Error::Version {
                expected: format!("{:016x}", cfg.arch_hash()),
                found: format!("{:016x}", ck.arch_hash),
            });
        }
        let mut model = Self::new(cfg, 0)?;
        let names = model.params.names().to_vec();
        for (i, name) in names.iter().enumerate() {
            let b = require(ck, name)?;
            let t = &mut model.params.tensors_mut()[i];
            if b.dims != t.shape() {
                return Err(Error::Format(format!(
                    "block {name} has shape {:?}, model expects {:?}",
                    b.dims,
                    t.shape()
                )));
            }
            t.data_mut().copy_from_slice(&b.data);
        }
        for (name, bn) in model.norm_names.iter().zip(model.norms.iter_mut()) {
            for (suffix, dst) in [("running_mean", &mut bn.running_mean), ("running_var", &mut bn.running_var)] {
                let b = require(ck, &format!("{name}.{suffix}"))?;
                if b.data.len() != dst.len() {
                    return Err(Error::Format(format!("block {name}.{suffix} has the wrong length")));
                }
                dst.iter_mut().zip(&b.data).for_each(|(d, &v)| *d = v as f64);
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_checkpoint().write(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::read(path)?)
    }
}

fn require<'a>(ck: &'a Checkpoint, name: &str) -> Result<&'a Block> {
    ck.block(name)
        .ok_or_else(|| Error::Format(format!("checkpoint has no block {name}")))
}

fn infer_config(ck: &Checkpoint) -> Result<PolarDenseNetConfig> {
    let dim0 = |name: &str| require(ck, name).map(|b| b.dims.first().copied().unwrap_or(0));
    let count = |prefix: &str, suffix: &str| {
        (0..)
            .take_while(|i| ck.block(&format!("{prefix}{i}{suffix}")).is_some())
            .count()
    };
    let mut cfg = PolarDenseNetConfig::new(ck.n as usize, ck.k as usize, ck.gamma)?;
    cfg.beta = ck.beta;
    cfg.latent_dim = dim0("enc.dense.bias")?;
    cfg.path_channels = dim0("enc.path0.spatial.bias")?;
    cfg.growth_channels = dim0("enc.block.conv0.bias")?;
    cfg.dense_block_layers = count("enc.block.conv", ".bias");
    cfg.decoder_blocks = count("dec.block", ".transition.bias");
    cfg.shared_paths = ck.block("enc.path1.spatial.bias").is_none();
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{CMatrix, C64};

    fn small(shared: bool) -> PolarDenseNetConfig {
        let mut c = PolarDenseNetConfig::new(8, 3, 0.25).unwrap();
        c.path_channels = 3;
        c.growth_channels = 2;
        c.dense_block_layers = 2;
        c.shared_paths = shared;
        c
    }

    fn sample(seed: f64) -> PrecoderChannelMatrix {
        let mut p = PrecoderChannelMatrix::new(CMatrix::from_fn(8, 3, |i, j| {
            C64::new((seed + i as f64 * 0.7 + j as f64).sin(), (seed * 1.3 + i as f64 - j as f64).cos())
        }));
        p.normalize_columns();
        p
    }

    #[test]
    fn shapes_and_unit_columns() {
        let m = PolarDenseNet::<f64>::new(small(false), 1).unwrap();
        let h = sample(0.2);
        let z = m.encode(&h).unwrap();
        assert_eq!(z.len(), m.cfg.latent_dim);
        assert!(z.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let code = quantize(&z, m.cfg.beta);
        assert_eq!(code.bit_len(), m.cfg.latent_dim * 2);
        assert_eq!(code.to_bits().len(), code.bit_len());
        let out = m.decode_code(&code).unwrap();
        assert_eq!((out.n(), out.k()), (8, 3));
        assert!(out.max_norm_error() < 1e-12);
    }

    #[test]
    fn eval_is_deterministic() {
        let a = PolarDenseNet::<f32>::new(small(false), 9).unwrap();
        let b = PolarDenseNet::<f32>::new(small(false), 9).unwrap();
        let zero = PrecoderChannelMatrix::new(CMatrix::zeros(8, 3));
        assert_eq!(a.encode(&zero).unwrap(), b.encode(&zero).unwrap());
        assert_eq!(a.encode(&zero).unwrap(), a.encode(&zero).unwrap());
    }

    #[test]
    fn quantize_round_trip_is_idempotent() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.618).fract()).collect();
        let c = quantize(&xs, 2);
        assert!(c.levels.iter().all(|&l| l <= 3));
        let back = dequantize(&c);
        assert_eq!(quantize(&back, 2), c);
        assert!(xs.iter().zip(&back).all(|(a, b)| (a - b).abs() <= 1.0 / 6.0 + 1e-12));
    }

    #[test]
    fn swapping_polarizations_swaps_shared_paths() {
        let m = PolarDenseNet::<f64>::new(small(true), 4).unwrap();
        let h = sample(1.0);
        let mut swapped = CMatrix::zeros(8, 3);
        for i in 0..8 {
            for j in 0..3 {
                swapped[(i, j)] = h.matrix()[((i + 4) % 8, j)];
            }
        }
        let swapped = PrecoderChannelMatrix::new(swapped);
        let run = |h: &PrecoderChannelMatrix| {
            let mut tape = Tape::new();
            let p = m.params.bind_frozen(&mut tape);
            let x = tape.constant(m.batch_tensor(&[h]).unwrap());
            let (u, l) = m.encode_paths(&mut tape, &p, x, Mode::Eval, &mut Vec::new()).unwrap();
            (tape.value(u).data().to_vec(), tape.value(l).data().to_vec())
        };
        let (u, l) = run(&h);
        let (su, sl) = run(&swapped);
        assert_eq!(u, sl);
        assert_eq!(l, su);
        assert_ne!(u, l);
    }

    #[test]
    fn rejects_wrong_shape() {
        let m = PolarDenseNet::<f64>::new(small(false), 1).unwrap();
        let h = PrecoderChannelMatrix::new(CMatrix::zeros(6, 3));
        assert!(m.encode(&h).is_err());
        let code = LatentCode { levels: vec![0; 3], beta: 2 };
        assert!(m.decode_code(&code).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut cfg = small(false);
        cfg.latent_dim = 5;
        let mut m = PolarDenseNet::<f32>::new(cfg, 3).unwrap();
        m.norms[1].running_mean[0] = 0.25;
        m.norms[2].running_var[1] = 3.5;
        let ck = m.to_checkpoint();
        let back = PolarDenseNet::<f32>::from_checkpoint(&ck).unwrap();
        assert_eq!(back.cfg, m.cfg);
        assert_eq!(back.params.tensors(), m.params.tensors());
        assert_eq!(back.norms[1].running_mean[0], 0.25);
        assert_eq!(back.to_checkpoint().to_bytes(), ck.to_bytes());
        let h = sample(0.4);
        let a = m.reconstruct(std::slice::from_ref(&h), 1).unwrap();
        let b = back.reconstruct(&[h], 1).unwrap();
        assert_eq!(a, b);

        let shared = PolarDenseNet::<f32>::new(small(true), 3).unwrap();
        let again = PolarDenseNet::<f32>::from_checkpoint(&shared.to_checkpoint()).unwrap();
        assert!(again.cfg.shared_paths);
    }

    #[test]
    fn checkpoint_rejects_tampering() {
        let m = PolarDenseNet::<f32>::new(small(false), 3).unwrap();
        let mut ck = m.to_checkpoint();
        ck.arch_hash ^= 1;
        assert!(matches!(PolarDenseNet::<f32>::from_checkpoint(&ck), Err(Error::Version { .. })));
        let mut ck = m.to_checkpoint();
        ck.blocks.retain(|b| b.name != "dec.out.weight");
        assert!(matches!(PolarDenseNet::<f32>::from_checkpoint(&ck), Err(Error::Format(_))));
        let missing = std::env::temp_dir().join("csi-lab-no-such-checkpoint.bin");
        assert!(matches!(PolarDenseNet::<f32>::load(&missing), Err(Error::MissingArtifact(_))));
    }
}
