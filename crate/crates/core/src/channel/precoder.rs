use super::cmat::{canonicalize_phase, norm, CMatrix, C64};
use super::config::OfdmConfig;
use super::eigen::dominant_eigenvector;
use crate::error::{Error, Result};

/// `N x K` matrix of per-subband dominant eigenvectors, one per column.
///
/// Columns produced by [`build_precoder_matrix`] are unit-norm and
/// phase-canonical (first entry real and non-negative). Reconstructions may
/// relax the phase convention but keep unit columns.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecoderChannelMatrix {
    m: CMatrix,
}

impl PrecoderChannelMatrix {
    pub fn new(m: CMatrix) -> Self {
        PrecoderChannelMatrix { m }
    }

    pub fn from_columns(cols: &[Vec<C64>]) -> Self {
        Self::new(CMatrix::from_columns(cols))
    }

    pub fn n(&self) -> usize {
        self.m.rows()
    }

    pub fn k(&self) -> usize {
        self.m.cols()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn column(&self, k: usize) -> Vec<C64> {
        self.m.column(k)
    }

    pub fn columns(&self) -> Vec<Vec<C64>> {
        (0..self.k()).map(|k| self.m.column(k)).collect()
    }

    /// Scales every nonzero column to unit norm.
    pub fn normalize_columns(&mut self) {
        for k in 0..self.k() {
            let mut c = self.m.column(k);
            let s = norm(&c);
            if s > 0.0 {
                c.iter_mut().for_each(|z| *z /= s);
                self.m.set_column(k, &c);
            }
        }
    }

    pub fn canonicalize_columns(&mut self) {
        for k in 0..self.k() {
            let mut c = self.m.column(k);
            canonicalize_phase(&mut c);
            self.m.set_column(k, &c);
        }
    }

    /// Largest deviation of any column norm from one.
    pub fn max_norm_error(&self) -> f64 {
        (0..self.k())
            .map(|k| (norm(&self.m.column(k)) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_phase_canonical(&self) -> bool {
        (0..self.k()).all(|k| {
            let z = self.m[(0, k)];
            z.im == 0.0 && z.re >= 0.0
        })
    }

    /// Real plane then imaginary plane, each row-major `N x K`.
    pub fn to_planes(&self) -> Vec<f64> {
        let d = self.m.as_slice();
        d.iter().map(|z| z.re).chain(d.iter().map(|z| z.im)).collect()
    }

    pub fn from_planes(n: usize, k: usize, planes: &[f64]) -> Result<Self> {
        if planes.len() != 2 * n * k {
            return Err(Error::Contract(format!(
                "expected {} plane values for {n}x{k}, got {}",
                2 * n * k,
                planes.len()
            )));
        }
        let (re, im) = planes.split_at(n * k);
        let data = re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect();
        Ok(Self::new(CMatrix::from_vec(n, k, data)))
    }
}

/// Relabelings that map the generator's distribution onto itself.
///
/// * `swap_polarizations`: exchanges the upper and lower halves (the
///   cross-polarization phase is uniform).
/// * `reverse_ports`: reverses the port order inside each polarization,
///   which mirrors azimuth and zenith about broadside.
/// * `conjugate`: conjugates every entry and reverses the subband order,
///   which mirrors angles and keeps delays causal.
///
/// Columns are re-canonicalized afterwards.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Symmetry {
    pub swap_polarizations: bool,
    pub reverse_ports: bool,
    pub conjugate: bool,
}

impl Symmetry {
    /// Bit 0 swaps polarizations, bit 1 reverses ports, bit 2 conjugates.
    pub fn from_bits(bits: u8) -> Self {
        Symmetry {
            swap_polarizations: bits & 1 != 0,
            reverse_ports: bits & 2 != 0,
            conjugate: bits & 4 != 0,
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Symmetry::default()
    }
}

impl PrecoderChannelMatrix {
    /// Applies `s`. `N` must be even unless `s` is the identity.
    pub fn transformed(&self, s: Symmetry) -> Result<Self> {
        if s.is_identity() {
            return Ok(self.clone());
        }
        let (n, k) = (self.n(), self.k());
        if n % 2 != 0 {
            return Err(Error::Contract(format!("polarization split needs even N, got {n}")));
        }
        let half = n / 2;
        let m = CMatrix::from_fn(n, k, |i, j| {
            let (mut pol, mut port) = (i / half, i % half);
            if s.swap_polarizations {
                pol = 1 - pol;
            }
            if s.reverse_ports {
                port = half - 1 - port;
            }
            let src_col = if s.conjugate { k - 1 - j } else { j };
            let z = self.m[(pol * half + port, src_col)];
            if s.conjugate {
                z.conj()
            } else {
                z
            }
        });
        let mut out = Self::new(m);
        out.canonicalize_columns();
        Ok(out)
    }
}

/// Per-subband sample covariance `R_k = (1/M) sum_{rb in k} h h^H` and its
/// dominant eigenvector as column `k`.
pub fn build_precoder_matrix(
    rb_channels: &[CMatrix],
    ofdm: &OfdmConfig,
) -> Result<PrecoderChannelMatrix> {
    if rb_channels.len() != ofdm.rbs {
        return Err(Error::Contract(format!(
            "expected one channel per RB ({}), got {}",
            ofdm.rbs,
            rb_channels.len()
        )));
    }
    let n = rb_channels[0].rows();
    let mut cols = Vec::with_capacity(ofdm.subbands());
    for k in 0..ofdm.subbands() {
        let rbs = ofdm.subband_rbs(k);
        if rbs.is_empty() {
            return Err(Error::Contract(format!("subband {k} has no resource blocks")));
        }
        let m = rbs.len() as f64;
        let mut r = CMatrix::zeros(n, n);
        for h in &rb_channels[rbs] {
            if h.rows() != n {
                return Err(Error::Contract("RB channels disagree on N".into()));
            }
            r.add_assign(&h.matmul(&h.adjoint()));
        }
        r.scale(1.0 / m);
        let (v, _) = dominant_eigenvector(&r)?;
        cols.push(v);
    }
    Ok(PrecoderChannelMatrix::from_columns(&cols))
}
