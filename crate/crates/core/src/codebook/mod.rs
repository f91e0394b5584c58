//! Type-II style codebook baselines: spatial-domain beam selection with
//! per-subband combining (Rel-15) and joint spatial/frequency compression
//! (Rel-16), plus feedback-bit accounting.

pub mod fd;
pub mod quant;
pub mod sd;

use std::fmt;

pub use fd::{build_fd_basis, FdBasis};
pub use quant::QuantConfig;
pub use sd::{build_sd_basis, SdBasis};

use crate::channel::{AntennaConfig, CMatrix, PrecoderChannelMatrix, C64};
use crate::error::{Error, Result};
use crate::eval::metrics::{format_db, sample_cosine, sample_nmse, to_db};
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Rel15 { l: usize },
    Rel16 { l: usize, m: usize },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Rel15 { .. } => "rel15",
            Scheme::Rel16 { .. } => "rel16",
        }
    }

    pub fn l(&self) -> usize {
        match *self {
            Scheme::Rel15 { l } | Scheme::Rel16 { l, .. } => l,
        }
    }

    pub fn m(&self) -> Option<usize> {
        match *self {
            Scheme::Rel15 { .. } => None,
            Scheme::Rel16 { m, .. } => Some(m),
        }
    }

    /// `L=4` or `L=4;M=3`.
    pub fn params(&self) -> String {
        match self.m() {
            None => format!("L={}", self.l()),
            Some(m) => format!("L={};M={m}", self.l()),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.name(), self.params())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodebookConfig {
    pub scheme: Scheme,
    pub o1: usize,
    pub o2: usize,
    pub quant: QuantConfig,
}

impl CodebookConfig {
    pub fn new(scheme: Scheme) -> Self {
        CodebookConfig {
            scheme,
            o1: 4,
            o2: 1,
            quant: QuantConfig::default(),
        }
    }

    pub fn unquantized(scheme: Scheme) -> Self {
        CodebookConfig {
            quant: QuantConfig::unquantized(),
            ..Self::new(scheme)
        }
    }

    pub fn compress(&self, ant: &AntennaConfig, h: &PrecoderChannelMatrix) -> Result<CodebookReport> {
        let basis = build_sd_basis(ant, self.o1, self.o2, self.scheme.l(), h)?;
        match self.scheme {
            Scheme::Rel15 { .. } => rel15_compress(ant, h, &basis, &self.quant, self.o1, self.o2),
            Scheme::Rel16 { m, .. } => {
                let w2 = basis.w1().adjoint().matmul(h.matrix());
                let fd = build_fd_basis(&w2, m)?;
                rel16_compress(ant, h, &basis, &fd, &self.quant)
            }
        }
    }

    /// Reconstructions of every sample, in order.
    pub fn reconstruct_all(
        &self,
        ant: &AntennaConfig,
        samples: &[PrecoderChannelMatrix],
    ) -> Result<Vec<PrecoderChannelMatrix>> {
        par::map_slice(samples, |h| self.compress(ant, h).map(|r| r.reconstruction))
            .into_iter()
            .collect()
    }

    pub fn bits(&self, ant: &AntennaConfig, k: usize) -> BitAllocation {
        count_bits(ant, k, self)
    }
}

/// Feedback payload split by field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BitAllocation {
    pub rotation: u64,
    pub beams: u64,
    pub fd_basis: u64,
    pub strongest: u64,
    pub amplitude: u64,
    pub phase: u64,
}

impl BitAllocation {
    pub fn index_bits(&self) -> u64 {
        self.rotation + self.beams + self.fd_basis + self.strongest
    }

    pub fn total(&self) -> u64 {
        self.index_bits() + self.amplitude + self.phase
    }
}

/// `ceil(log2(x))`, zero for `x <= 1`.
pub fn ceil_log2(x: u128) -> u64 {
    if x <= 1 {
        0
    } else {
        (128 - (x - 1).leading_zeros()) as u64
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Index fields are `ceil(log2(candidates))`. Quantized coefficients are
/// sent relative to the strongest one, which costs only its position:
/// Rel-15 sends one wideband amplitude per remaining beam and one phase per
/// remaining beam and subband; Rel-16 sends amplitude and phase for every
/// remaining coefficient of `C`. Unquantized coefficients cost
/// [`quant::FULL_PRECISION_BITS`] per real part and imaginary part.
pub fn count_bits(ant: &AntennaConfig, k: usize, cfg: &CodebookConfig) -> BitAllocation {
    let l = cfg.scheme.l();
    let q = &cfg.quant;
    let rotation = ceil_log2((cfg.o1 * cfg.o2) as u128);
    let beams = ceil_log2(binomial(ant.ports_per_pol(), l));
    let (fd_basis, coeffs, amp_count, phase_count) = match cfg.scheme {
        Scheme::Rel15 { .. } => {
            let rows = 2 * l;
            (0, rows, rows - 1, k * (rows - 1))
        }
        Scheme::Rel16 { m, .. } => {
            let n = 2 * l * m;
            (ceil_log2(binomial(k, m)), n, n - 1, n - 1)
        }
    };
    if !q.quantized {
        let total = match cfg.scheme {
            Scheme::Rel15 { .. } => coeffs * k,
            Scheme::Rel16 { .. } => coeffs,
        } as u64;
        return BitAllocation {
            rotation,
            beams,
            fd_basis,
            strongest: 0,
            amplitude: total * q.amplitude_field(),
            phase: total * q.phase_field(),
        };
    }
    BitAllocation {
        rotation,
        beams,
        fd_basis,
        strongest: ceil_log2(coeffs as u128),
        amplitude: amp_count as u64 * q.amplitude_field(),
        phase: phase_count as u64 * q.phase_field(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodebookReport {
    pub scheme: Scheme,
    pub sd: SdBasis,
    pub fd: Option<FdBasis>,
    /// `W2` (Rel-15, `2L x K`) or `C` (Rel-16, `2L x M`) as fed back.
    pub coefficients: CMatrix,
    /// Position of the reference coefficient, if quantized.
    pub strongest: Option<(usize, usize)>,
    pub bits: BitAllocation,
    pub reconstruction: PrecoderChannelMatrix,
}

impl CodebookReport {
    pub fn bit_count(&self) -> u64 {
        self.bits.total()
    }

    /// One-line record: `scheme=rel16 L=4 M=3 bits=165 nmse_db=-3.1 rho=0.84`.
    pub fn record(&self, h: &PrecoderChannelMatrix) -> Result<String> {
        let nmse = sample_nmse(h, &self.reconstruction)?;
        let rho = sample_cosine(h, &self.reconstruction)?;
        let m = self.scheme.m().map_or("-".to_string(), |m| m.to_string());
        Ok(format!(
            "scheme={} L={} M={m} bits={} nmse_db={} rho={rho:.6}",
            self.scheme.name(),
            self.scheme.l(),
            self.bit_count(),
            format_db(to_db(nmse)),
        ))
    }
}

fn check_basis(ant: &AntennaConfig, h: &PrecoderChannelMatrix, basis: &SdBasis) -> Result<()> {
    if h.n() != ant.n() || basis.b.rows() != ant.ports_per_pol() {
        return Err(Error::dim(
            "codebook basis",
            &[ant.n(), basis.b.rows() * 2],
            &[h.n()],
        ));
    }
    Ok(())
}

fn finish(m: CMatrix, quant: &QuantConfig) -> PrecoderChannelMatrix {
    let mut p = PrecoderChannelMatrix::new(m);
    if quant.quantized {
        p.normalize_columns();
        p.canonicalize_columns();
    }
    p
}

/// Row with the most energy; ties to the lowest index.
fn strongest_row(w: &CMatrix) -> usize {
    let energy: Vec<f64> = (0..w.rows())
        .map(|i| (0..w.cols()).map(|k| w[(i, k)].norm_sqr()).sum())
        .collect();
    sd::top_indices(&energy, 1)[0]
}

/// `W2 = W1^H H`, reconstruction `W1 W2_hat`.
///
/// Quantized mode takes the wideband-strongest row as reference: every
/// subband is rotated so that its reference coefficient is one, the other
/// rows get one wideband amplitude (relative energy) and per-subband phases.
pub fn rel15_compress(
    ant: &AntennaConfig,
    h: &PrecoderChannelMatrix,
    basis: &SdBasis,
    quant: &QuantConfig,
    o1: usize,
    o2: usize,
) -> Result<CodebookReport> {
    check_basis(ant, h, basis)?;
    let w1 = basis.w1();
    let w2 = w1.adjoint().matmul(h.matrix());
    let cfg = CodebookConfig {
        scheme: Scheme::Rel15 { l: basis.l() },
        o1,
        o2,
        quant: *quant,
    };
    let bits = count_bits(ant, h.k(), &cfg);
    let (coefficients, strongest) = if quant.quantized {
        let r = strongest_row(&w2);
        let energy = |i: usize| -> f64 { (0..w2.cols()).map(|k| w2[(i, k)].norm_sqr()).sum() };
        let ref_e = energy(r);
        let coef = CMatrix::from_fn(w2.rows(), w2.cols(), |i, k| {
            if i == r {
                return C64::new(1.0, 0.0);
            }
            let amp = if ref_e > 0.0 { (energy(i) / ref_e).sqrt() } else { 0.0 };
            let phase = (w2[(i, k)] * w2[(r, k)].conj()).arg();
            C64::from_polar(quant.quantize_amplitude(amp), quant.quantize_phase(phase))
        });
        (coef, Some((r, 0)))
    } else {
        (w2, None)
    };
    let reconstruction = finish(w1.matmul(&coefficients), quant);
    Ok(CodebookReport {
        scheme: cfg.scheme,
        sd: basis.clone(),
        fd: None,
        coefficients,
        strongest,
        bits,
        reconstruction,
    })
}

/// `C = W2 W_f`, reconstruction `W1 C_hat W_f^H`.
///
/// Quantized mode divides `C` by its largest-magnitude entry and quantizes
/// amplitude and phase of every other entry.
pub fn rel16_compress(
    ant: &AntennaConfig,
    h: &PrecoderChannelMatrix,
    basis: &SdBasis,
    fd: &FdBasis,
    quant: &QuantConfig,
) -> Result<CodebookReport> {
    check_basis(ant, h, basis)?;
    if fd.wf.rows() != h.k() {
        return Err(Error::dim("rel16_compress", &[h.k()], &[fd.wf.rows()]));
    }
    if fd.m() > h.k() {
        return Err(Error::Config(format!("M = {} exceeds K = {}", fd.m(), h.k())));
    }
    let w1 = basis.w1();
    let w2 = w1.adjoint().matmul(h.matrix());
    let c = w2.matmul(&fd.wf);
    let cfg = CodebookConfig {
        scheme: Scheme::Rel16 {
            l: basis.l(),
            m: fd.m(),
        },
        o1: basis.o1,
        o2: basis.o2,
        quant: *quant,
    };
    let bits = count_bits(ant, h.k(), &cfg);
    let (coefficients, strongest) = if quant.quantized {
        let mags: Vec<f64> = c.as_slice().iter().map(|z| z.norm()).collect();
        let s = sd::top_indices(&mags, 1)[0];
        let pos = (s / c.cols(), s % c.cols());
        let reference = c.as_slice()[s];
        let coef = CMatrix::from_fn(c.rows(), c.cols(), |i, j| {
            if (i, j) == pos {
                C64::new(1.0, 0.0)
            } else if reference.norm() > 0.0 {
                quant.quantize(c[(i, j)] / reference)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        (coef, Some(pos))
    } else {
        (c, None)
    };
    let recon = w1.matmul(&coefficients).matmul(&fd.wf.adjoint());
    Ok(CodebookReport {
        scheme: cfg.scheme,
        sd: basis.clone(),
        fd: Some(fd.clone()),
        coefficients,
        strongest,
        bits,
        reconstruction: finish(recon, quant),
    })
}
