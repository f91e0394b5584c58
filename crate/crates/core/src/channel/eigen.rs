//! Dominant eigenpair of a Hermitian positive semidefinite matrix.

use super::cmat::{canonicalize_phase, inner, norm, CMatrix, C64};
use crate::error::{Error, Result};

/// Residual tolerance, relative to the eigenvalue.
pub const RESIDUAL_TOL: f64 = 1e-10;
const POWER_ITERS: usize = 500;
const JACOBI_SWEEPS: usize = 100;

/// Unit-norm, phase-canonical eigenvector of the largest eigenvalue.
///
/// `r` is symmetrized first. Power iteration from a fixed pseudo-random start
/// handles the common well-separated case; if it has not reached the residual
/// tolerance the full cyclic Jacobi decomposition is used instead.
pub fn dominant_eigenvector(r: &CMatrix) -> Result<(Vec<C64>, f64)> {
    if r.rows() != r.cols() || r.rows() == 0 {
        return Err(Error::Contract(format!(
            "dominant_eigenvector needs a non-empty square matrix, got {}x{}",
            r.rows(),
            r.cols()
        )));
    }
    if !r.is_finite() {
        return Err(Error::NonFinite("covariance matrix".into()));
    }
    let n = r.rows();
    let mut a = r.clone();
    for i in 0..n {
        for j in i..n {
            let s = 0.5 * (a[(i, j)] + a[(j, i)].conj());
            a[(i, j)] = s;
            a[(j, i)] = s.conj();
        }
    }

    let (mut v, lambda) = match power_iteration(&a) {
        Some(pair) => pair,
        None => {
            let (vals, vecs) = jacobi_eigen(&a);
            let best = argmax(&vals);
            (vecs.column(best), vals[best])
        }
    };
    canonicalize_phase(&mut v);
    Ok((v, lambda))
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Deterministic start vector with no special alignment to any basis.
fn start_vector(n: usize) -> Vec<C64> {
    let golden = 0.618_033_988_749_895_f64;
    let v: Vec<C64> = (0..n)
        .map(|i| {
            let t = (i as f64 + 1.0) * golden;
            C64::from_polar(1.0 + (t * 7.0).fract(), std::f64::consts::TAU * t.fract())
        })
        .collect();
    let s = norm(&v);
    v.into_iter().map(|z| z / s).collect()
}

fn power_iteration(a: &CMatrix) -> Option<(Vec<C64>, f64)> {
    let n = a.rows();
    let scale = a.frobenius_sq().sqrt();
    if scale == 0.0 {
        let mut e = vec![C64::new(0.0, 0.0); n];
        e[0] = C64::new(1.0, 0.0);
        return Some((e, 0.0));
    }
    let mut v = start_vector(n);
    for _ in 0..POWER_ITERS {
        let w = a.matvec(&v);
        let lambda = inner(&v, &w).re;
        let resid: f64 = w
            .iter()
            .zip(&v)
            .map(|(&wi, &vi)| (wi - vi * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if lambda > 0.0 && resid <= RESIDUAL_TOL * lambda {
            return Some((v, lambda));
        }
        let wn = norm(&w);
        if wn == 0.0 {
            return None;
        }
        v = w.into_iter().map(|z| z / wn).collect();
    }
    None
}

/// Full eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns eigenvalues and the unitary matrix of eigenvectors
/// (as columns), unsorted.
pub fn jacobi_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.rows();
    let mut a = a.clone();
    let mut v = CMatrix::identity(n);
    let total = a.frobenius_sq().sqrt().max(f64::MIN_POSITIVE);
    for _ in 0..JACOBI_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let phase = apq / mag; // e^{j phi}
                let (app, aqq) = (a[(p, p)].re, a[(q, q)].re);
                let zeta = (aqq - app) / (2.0 * mag);
                let t = zeta.signum() / (zeta.abs() + (zeta * zeta + 1.0).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let em = phase.conj(); // e^{-j phi}

                // A <- A J, J = [[c, s], [-s e^{-j phi}, c e^{-j phi}]] on (p, q)
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * c - akq * em * s;
                    a[(k, q)] = akp * s + akq * em * c;
                }
                // A <- J^H A
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = apk * c - aqk * phase * s;
                    a[(q, k)] = apk * s + aqk * phase * c;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * c - vkq * em * s;
                    v[(k, q)] = vkp * s + vkq * em * c;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)].re).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let g = CMatrix::from_fn(n, rank, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        g.matmul(&g.adjoint())
    }

    fn residual(r: &CMatrix, v: &[C64], l: f64) -> f64 {
        let w = r.matvec(v);
        w.iter().zip(v).map(|(&a, &b)| (a - b * l).norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn identity_and_diagonal() {
        let (v, l) = dominant_eigenvector(&CMatrix::identity(4)).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
        assert!(residual(&CMatrix::identity(4), &v, l) <= 1e-8);
        assert!((norm(&v) - 1.0).abs() < 1e-12);

        let mut d = CMatrix::zeros(2, 2);
        d[(0, 0)] = C64::new(3.0, 0.0);
        d[(1, 1)] = C64::new(1.0, 0.0);
        let (v, l) = dominant_eigenvector(&d).unwrap();
        assert!((l - 3.0).abs() < 1e-12);
        assert!((v[0] - C64::new(1.0, 0.0)).norm() < 1e-9);
        assert!(v[1].norm() < 1e-9);
    }

    #[test]
    fn jacobi_diagonalizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2, 5, 12] {
            let a = random_hermitian(n, n, &mut rng);
            let (vals, vecs) = jacobi_eigen(&a);
            let recon = vecs
                .matmul(&CMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        C64::new(vals[i], 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                }))
                .matmul(&vecs.adjoint());
            let mut diff = recon.clone();
            diff.scale(-1.0);
            diff.add_assign(&a);
            assert!(diff.frobenius_sq().sqrt() < 1e-10 * a.frobenius_sq().sqrt());
        }
    }

    #[test]
    fn near_degenerate_top_pair_falls_back_and_meets_tolerance() {
        let n = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let q = jacobi_eigen(&random_hermitian(n, n, &mut rng)).1;
        let vals = [1.0, 1.0 - 1e-7, 0.5, 0.2, 0.1, 0.0];
        let d = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(vals[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let r = q.matmul(&d).matmul(&q.adjoint());
        let (v, l) = dominant_eigenvector(&r).unwrap();
        assert!((l - 1.0).abs() < 1e-6);
        assert!(residual(&r, &v, l) <= 1e-8 * l);
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = CMatrix::identity(3);
        m[(1, 2)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(dominant_eigenvector(&m), Err(Error::NonFinite(_))));
    }
}
