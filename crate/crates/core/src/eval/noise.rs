use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::channel::{CMatrix, PrecoderChannelMatrix, C64};
use crate::error::{Error, Result};
use crate::par;

/// Per-sample SNR drawn uniformly from `[snr_low_db, snr_high_db]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub snr_low_db: f64,
    pub snr_high_db: f64,
}

impl NoiseSpec {
    pub fn new(snr_low_db: f64, snr_high_db: f64) -> Result<Self> {
        if !(snr_low_db <= snr_high_db) || !snr_low_db.is_finite() || !snr_high_db.is_finite() {
            return Err(Error::Config(format!(
                "invalid SNR range [{snr_low_db}, {snr_high_db}] dB"
            )));
        }
        Ok(NoiseSpec {
            snr_low_db,
            snr_high_db,
        })
    }

    /// The three reference ranges: 0-5, 5-10 and 10-15 dB.
    pub fn presets() -> [NoiseSpec; 3] {
        [(0.0, 5.0), (5.0, 10.0), (10.0, 15.0)].map(|(l, h)| NoiseSpec {
            snr_low_db: l,
            snr_high_db: h,
        })
    }

    /// `0-5` style label.
    pub fn label(&self) -> String {
        format!("{}-{}", self.snr_low_db, self.snr_high_db)
    }
}

/// Adds complex white Gaussian noise whose per-element variance is the
/// sample's mean per-element power divided by the drawn SNR.
pub fn add_awgn<R: Rng>(h: &PrecoderChannelMatrix, spec: &NoiseSpec, rng: &mut R) -> PrecoderChannelMatrix {
    let snr_db = if spec.snr_low_db == spec.snr_high_db {
        spec.snr_low_db
    } else {
        rng.gen_range(spec.snr_low_db..=spec.snr_high_db)
    };
    let m = h.matrix();
    let power = m.frobenius_sq() / (m.rows() * m.cols()) as f64;
    let var = power / 10f64.powf(snr_db / 10.0);
    let normal = Normal::new(0.0, (var / 2.0).sqrt()).expect("finite variance");
    let data = m
        .as_slice()
        .iter()
        .map(|&z| z + C64::new(normal.sample(rng), normal.sample(rng)))
        .collect();
    PrecoderChannelMatrix::new(CMatrix::from_vec(m.rows(), m.cols(), data))
}

/// Noisy copies of `samples`; sample `i` uses ChaCha stream `i` of `seed`.
pub fn add_awgn_all(samples: &[PrecoderChannelMatrix], spec: &NoiseSpec, seed: u64) -> Vec<PrecoderChannelMatrix> {
    par::map_range(samples.len(), |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        add_awgn(&samples[i], spec, &mut rng)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::metrics::nmse;

    fn samples(count: usize) -> Vec<PrecoderChannelMatrix> {
        (0..count)
            .map(|s| {
                let mut p = PrecoderChannelMatrix::new(CMatrix::from_fn(8, 4, |i, j| {
                    C64::from_polar(1.0 + ((s + i) % 3) as f64, (i * j + s) as f64 * 0.4)
                }));
                p.normalize_columns();
                p
            })
            .collect()
    }

    #[test]
    fn vanishing_noise() {
        let hs = samples(20);
        let noisy = add_awgn_all(&hs, &NoiseSpec::new(300.0, 300.0).unwrap(), 1);
        assert!(nmse(&hs, &noisy).unwrap().db < -250.0);
    }

    #[test]
    fn zero_db_noise_has_unit_nmse() {
        let hs = samples(1000);
        let noisy = add_awgn_all(&hs, &NoiseSpec::new(0.0, 0.0).unwrap(), 2);
        assert!(nmse(&hs, &noisy).unwrap().db.abs() < 0.5);
    }

    #[test]
    fn presets_and_validation() {
        let p = NoiseSpec::presets();
        assert_eq!(p[0], NoiseSpec::new(0.0, 5.0).unwrap());
        assert_eq!(p[2].label(), "10-15");
        assert!(NoiseSpec::new(5.0, 0.0).is_err());
        assert!(NoiseSpec::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let hs = samples(5);
        let spec = NoiseSpec::presets()[1];
        assert_eq!(add_awgn_all(&hs, &spec, 7), add_awgn_all(&hs, &spec, 7));
        assert_ne!(add_awgn_all(&hs, &spec, 7), add_awgn_all(&hs, &spec, 8));
    }
}
