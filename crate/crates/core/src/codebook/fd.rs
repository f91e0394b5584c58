//! Frequency-domain DFT basis selection.

use std::f64::consts::TAU;

use crate::channel::{CMatrix, C64};
use crate::error::{Error, Result};

use super::sd::top_indices;

/// Exhaustive subset search is used up to this many subbands.
pub const EXHAUSTIVE_MAX_K: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct FdBasis {
    /// `K x M` orthonormal DFT columns.
    pub wf: CMatrix,
    /// DFT frequency index of each column, ascending.
    pub indices: Vec<usize>,
}

impl FdBasis {
    pub fn m(&self) -> usize {
        self.wf.cols()
    }

    pub fn from_indices(k: usize, indices: &[usize]) -> Self {
        let cols: Vec<Vec<C64>> = indices.iter().map(|&n| dft_column(k, n)).collect();
        FdBasis {
            wf: CMatrix::from_columns(&cols),
            indices: indices.to_vec(),
        }
    }
}

/// `f_n[k] = exp(j 2 pi k n / K) / sqrt(K)`.
pub fn dft_column(k: usize, n: usize) -> Vec<C64> {
    let s = 1.0 / (k as f64).sqrt();
    (0..k)
        .map(|i| C64::from_polar(s, TAU * ((i * n) % k) as f64 / k as f64))
        .collect()
}

/// Energy `||W2 f_n||^2` captured by each of the `K` DFT columns.
pub fn column_energy(w2: &CMatrix) -> Vec<f64> {
    let k = w2.cols();
    (0..k)
        .map(|n| {
            let f = dft_column(k, n);
            w2.matvec(&f).iter().map(|z| z.norm_sqr()).sum()
        })
        .collect()
}

/// Chooses `M` columns maximizing `||W2 W_f||_F^2`.
pub fn build_fd_basis(w2: &CMatrix, m: usize) -> Result<FdBasis> {
    let k = w2.cols();
    if m == 0 || m > k {
        return Err(Error::Config(format!("M = {m} outside 1..={k}")));
    }
    let energy = column_energy(w2);
    let mut indices = if k <= EXHAUSTIVE_MAX_K {
        exhaustive(&energy, m)
    } else {
        top_indices(&energy, m)
    };
    indices.sort_unstable();
    Ok(FdBasis::from_indices(k, &indices))
}

/// Best size-`m` subset over all `C(K, m)` candidates, first in
/// lexicographic order among ties.
fn exhaustive(energy: &[f64], m: usize) -> Vec<usize> {
    let k = energy.len();
    let mut comb: Vec<usize> = (0..m).collect();
    let mut best = comb.clone();
    let mut best_e = f64::NEG_INFINITY;
    loop {
        let e: f64 = comb.iter().map(|&i| energy[i]).sum();
        if e > best_e {
            best_e = e;
            best.clone_from(&comb);
        }
        let mut i = m;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if comb[i] < k - m + i {
                comb[i] += 1;
                for j in i + 1..m {
                    comb[j] = comb[j - 1] + 1;
                }
                break;
            }
        }
    }
}
