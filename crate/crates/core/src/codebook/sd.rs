//! Spatial-domain beam selection from an oversampled 2-D DFT grid.

use std::f64::consts::TAU;

use crate::channel::cmat::inner;
use crate::channel::{AntennaConfig, CMatrix, PrecoderChannelMatrix, C64};
use crate::error::{Error, Result};

/// `L` orthogonal DFT beams shared by both polarizations.
#[derive(Clone, Debug, PartialEq)]
pub struct SdBasis {
    /// `(N/2) x L`, one beam per column, strongest first.
    pub b: CMatrix,
    pub o1: usize,
    pub o2: usize,
    /// Rotation `(q1, q2)` identifying the orthogonal group.
    pub rotation: (usize, usize),
    /// Beam positions `(m1, m2)` inside the group, in column order of `b`.
    pub beams: Vec<(usize, usize)>,
    /// Projected power of each selected beam, summed over subbands and
    /// polarizations.
    pub beam_power: Vec<f64>,
}

impl SdBasis {
    pub fn l(&self) -> usize {
        self.b.cols()
    }

    /// `W1 = blockdiag(B, B)`, `N x 2L`.
    pub fn w1(&self) -> CMatrix {
        let (p, l) = (self.b.rows(), self.b.cols());
        CMatrix::from_fn(2 * p, 2 * l, |i, j| {
            if (i < p) == (j < l) {
                self.b[(i % p, j % l)]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }
}

/// Unit-norm DFT beam `(l1, l2)` on the `O1 N1 x O2 N2` grid, port order
/// `i1 * n2 + i2`.
pub fn dft_beam(ant: &AntennaConfig, o1: usize, o2: usize, l1: usize, l2: usize) -> Vec<C64> {
    let scale = 1.0 / (ant.ports_per_pol() as f64).sqrt();
    let mut v = Vec::with_capacity(ant.ports_per_pol());
    for i1 in 0..ant.n1 {
        for i2 in 0..ant.n2 {
            let phase = TAU
                * ((i1 * l1) as f64 / (o1 * ant.n1) as f64 + (i2 * l2) as f64 / (o2 * ant.n2) as f64);
            v.push(C64::from_polar(scale, phase));
        }
    }
    v
}

/// The `N1 N2` mutually orthogonal beams of group `(q1, q2)`, indexed by
/// `m1 * n2 + m2`.
pub fn group_beams(ant: &AntennaConfig, o1: usize, o2: usize, q1: usize, q2: usize) -> Vec<Vec<C64>> {
    let mut out = Vec::with_capacity(ant.ports_per_pol());
    for m1 in 0..ant.n1 {
        for m2 in 0..ant.n2 {
            out.push(dft_beam(ant, o1, o2, o1 * m1 + q1, o2 * m2 + q2));
        }
    }
    out
}

/// `sum_k sum_pol |b^H h_{k,pol}|^2`.
pub fn beam_power(beam: &[C64], h: &PrecoderChannelMatrix) -> f64 {
    let p = beam.len();
    (0..h.k())
        .map(|k| {
            let col = h.column(k);
            inner(beam, &col[..p]).norm_sqr() + inner(beam, &col[p..]).norm_sqr()
        })
        .sum()
}

/// Picks the orthogonal group and the `l` beams within it that capture the
/// most power of `h`. Ties go to the lowest group and beam index.
pub fn build_sd_basis(
    ant: &AntennaConfig,
    o1: usize,
    o2: usize,
    l: usize,
    h: &PrecoderChannelMatrix,
) -> Result<SdBasis> {
    if l == 0 || l > ant.ports_per_pol() {
        return Err(Error::Config(format!(
            "L = {l} outside 1..={}",
            ant.ports_per_pol()
        )));
    }
    if o1 == 0 || o2 == 0 {
        return Err(Error::Config("oversampling factors must be positive".into()));
    }
    if h.n() != ant.n() {
        return Err(Error::dim("build_sd_basis", &[ant.n()], &[h.n()]));
    }
    let mut best: Option<(f64, (usize, usize), Vec<usize>, Vec<f64>, Vec<Vec<C64>>)> = None;
    for q1 in 0..o1 {
        for q2 in 0..o2 {
            let beams = group_beams(ant, o1, o2, q1, q2);
            let powers: Vec<f64> = beams.iter().map(|b| beam_power(b, h)).collect();
            let chosen = top_indices(&powers, l);
            let total: f64 = chosen.iter().map(|&i| powers[i]).sum();
            if best.as_ref().map_or(true, |b| total > b.0) {
                let p = chosen.iter().map(|&i| powers[i]).collect();
                best = Some((total, (q1, q2), chosen, p, beams));
            }
        }
    }
    let (_, rotation, chosen, beam_power, beams) = best.expect("at least one group");
    let cols: Vec<Vec<C64>> = chosen.iter().map(|&i| beams[i].clone()).collect();
    Ok(SdBasis {
        b: CMatrix::from_columns(&cols),
        o1,
        o2,
        rotation,
        beams: chosen.iter().map(|&i| (i / ant.n2, i % ant.n2)).collect(),
        beam_power,
    })
}

/// Indices of the `l` largest values, descending, ties to the lowest index.
pub(crate) fn top_indices(values: &[f64], l: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(l);
    idx
}
