//! Independent references: nalgebra for eigenpairs, closed forms for metrics.

use csi_lab::channel::eigen::{dominant_eigenvector, jacobi_eigen};
use csi_lab::channel::{CMatrix, PrecoderChannelMatrix, C64};
use csi_lab::eval::metrics::{cosine_similarity, nmse};
use csi_lab::eval::noise::{add_awgn_all, NoiseSpec};
use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_hermitian_psd(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let a = CMatrix::from_fn(n, rank, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    a.matmul(&a.adjoint())
}

fn to_nalgebra(m: &CMatrix) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

#[test]
fn dominant_eigenpair_matches_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for trial in 0..40 {
        let n = [4, 8, 16, 32][trial % 4];
        let r = random_hermitian_psd(n, 1 + trial % 5, &mut rng);
        let (v, lambda) = dominant_eigenvector(&r).unwrap();

        let eig = to_nalgebra(&r).symmetric_eigen();
        let (idx, &top) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!((lambda - top).abs() <= 1e-9 * top, "trial {trial}: {lambda} vs {top}");

        let reference = eig.eigenvectors.column(idx);
        let overlap: C64 = reference.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-8, "trial {trial}: |<v, v_ref>| = {}", overlap.norm());
    }
}

#[test]
fn jacobi_spectrum_matches_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for n in [2, 5, 9, 16] {
        let r = random_hermitian_psd(n, n, &mut rng);
        let (mut ours, _) = jacobi_eigen(&r);
        let mut theirs: Vec<f64> = to_nalgebra(&r).symmetric_eigen().eigenvalues.iter().copied().collect();
        ours.sort_by(f64::total_cmp);
        theirs.sort_by(f64::total_cmp);
        for (a, b) in ours.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "n={n}: {a} vs {b}");
        }
    }
}

fn random_precoder(n: usize, k: usize, rng: &mut ChaCha8Rng) -> PrecoderChannelMatrix {
    let mut h = PrecoderChannelMatrix::new(CMatrix::from_fn(n, k, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }));
    h.normalize_columns();
    h
}

#[test]
fn scalar_perturbation_gives_minus_twenty_db() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let h: Vec<_> = (0..20).map(|_| random_precoder(8, 5, &mut rng)).collect();
    let scaled: Vec<_> = h
        .iter()
        .map(|p| {
            let mut m = p.matrix().clone();
            m.scale(1.1);
            PrecoderChannelMatrix::new(m)
        })
        .collect();
    let e = nmse(&h, &scaled).unwrap();
    assert!((e.linear - 0.01).abs() < 1e-12);
    assert!((e.db + 20.0).abs() < 1e-9);
    assert!((cosine_similarity(&h, &scaled).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn zero_db_noise_has_unit_nmse() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let h: Vec<_> = (0..1000).map(|_| random_precoder(32, 13, &mut rng)).collect();
    let noisy = add_awgn_all(&h, &NoiseSpec::new(0.0, 0.0).unwrap(), 3);
    let db = nmse(&h, &noisy).unwrap().db;
    assert!(db.abs() < 0.5, "{db}");
    let silent = add_awgn_all(&h, &NoiseSpec::new(300.0, 300.0).unwrap(), 3);
    assert!(nmse(&h, &silent).unwrap().db < -250.0);
}
