//! Clustered multipath generator.
//!
//! Clusters have uniformly drawn centre azimuths and exponentially
//! distributed excess delays; each cluster's power decays with its delay and
//! carries log-normal shadowing. Paths are spread around their cluster centre
//! with a Gaussian azimuth offset and a small delay jitter, and get uniformly
//! random carrier phases. Both polarizations see the same positional response,
//! the second one rotated by a per-path cross-polarization phase.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};

use super::cmat::{CMatrix, C64};
use super::config::{AntennaConfig, ChannelModel, OfdmConfig};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Path {
    pub gain: C64,
    pub delay_s: f64,
    /// Departure azimuth, radians from broadside.
    pub azimuth: f64,
    /// Departure zenith, radians (pi/2 is the horizon).
    pub zenith: f64,
    /// Arrival angle at the receive ULA, radians from broadside.
    pub rx_angle: f64,
    /// Phase of the second polarization relative to the first.
    pub pol_phase: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultipathRealization {
    pub paths: Vec<Path>,
}

impl MultipathRealization {
    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.gain.norm_sqr()).sum()
    }

    /// Rescales gains so that the total power is one.
    pub fn normalize(&mut self) {
        let p = self.total_power();
        if p > 0.0 {
            let s = 1.0 / p.sqrt();
            self.paths.iter_mut().for_each(|path| path.gain *= s);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths.is_empty() {
            return Err(Error::Config("multipath realization has no paths".into()));
        }
        if self.paths.iter().any(|p| !(p.delay_s >= 0.0)) {
            return Err(Error::Config("path delays must be non-negative".into()));
        }
        Ok(())
    }
}

/// Draws a realization from `model`. Gains are normalized to unit total
/// power.
pub fn realize<R: Rng>(model: &ChannelModel, rng: &mut R) -> MultipathRealization {
    let angle_sd = model.angle_spread_deg.to_radians();
    let az_range = model.azimuth_range_deg.to_radians();
    let delay_dist = Exp::new(1.0).expect("unit rate");
    let shadow = Normal::new(0.0, 3.0).expect("finite sd");
    let unit = Normal::new(0.0, 1.0).expect("finite sd");

    struct Cluster {
        azimuth: f64,
        zenith: f64,
        rx_angle: f64,
        delay: f64,
        power: f64,
    }
    let mut clusters: Vec<Cluster> = (0..model.clusters)
        .map(|_| {
            let delay = model.delay_spread_s * delay_dist.sample(rng);
            let shadow_db: f64 = shadow.sample(rng);
            Cluster {
                azimuth: rng.gen_range(-az_range..=az_range),
                zenith: PI / 2.0 + rng.gen_range(-0.15..0.15),
                rx_angle: rng.gen_range(-PI / 2.0..PI / 2.0),
                delay,
                power: delay_decay(delay, model.delay_spread_s) * 10f64.powf(shadow_db / 10.0),
            }
        })
        .collect();
    // The first cluster is the line-of-sight-like reference at zero delay.
    if let Some(c) = clusters.first_mut() {
        c.delay = 0.0;
        c.power = 1.0;
    }

    let mut paths = Vec::with_capacity(model.paths);
    for i in 0..model.paths {
        let c = &clusters[i % model.clusters];
        let per_cluster = model.paths / model.clusters
            + usize::from(i % model.clusters < model.paths % model.clusters);
        let amp = (c.power / per_cluster as f64).sqrt();
        let phase = rng.gen_range(0.0..2.0 * PI);
        paths.push(Path {
            gain: C64::from_polar(amp, phase),
            delay_s: c.delay + rng.gen_range(0.0..10e-9),
            azimuth: (c.azimuth + angle_sd * unit.sample(rng)).clamp(-PI / 2.0, PI / 2.0),
            zenith: c.zenith + 0.25 * angle_sd * unit.sample(rng),
            rx_angle: c.rx_angle + 4.0 * angle_sd * unit.sample(rng),
            pol_phase: rng.gen_range(0.0..2.0 * PI),
        });
    }
    let mut r = MultipathRealization { paths };
    r.normalize();
    r
}

fn delay_decay(delay: f64, spread: f64) -> f64 {
    if spread > 0.0 {
        (-delay / spread).exp()
    } else {
        1.0
    }
}

/// Positional response of the `n1 x n2` panel, half-wavelength spacing,
/// port index `i1 * n2 + i2`.
pub fn panel_response(ant: &AntennaConfig, azimuth: f64, zenith: f64) -> Vec<C64> {
    let u = PI * zenith.sin() * azimuth.sin();
    let v = PI * zenith.cos();
    let mut out = Vec::with_capacity(ant.ports_per_pol());
    for i1 in 0..ant.n1 {
        for i2 in 0..ant.n2 {
            out.push(C64::from_polar(1.0, u * i1 as f64 + v * i2 as f64));
        }
    }
    out
}

/// Dual-polarized transmit response: the positional response stacked on top
/// of itself, the lower copy rotated by `pol_phase`.
pub fn tx_response(ant: &AntennaConfig, path: &Path) -> Vec<C64> {
    let pos = panel_response(ant, path.azimuth, path.zenith);
    let rot = C64::from_polar(1.0, path.pol_phase);
    pos.iter().copied().chain(pos.iter().map(|&z| z * rot)).collect()
}

pub fn rx_response(n_rx: usize, angle: f64) -> Vec<C64> {
    let u = PI * angle.sin();
    (0..n_rx).map(|r| C64::from_polar(1.0, u * r as f64)).collect()
}

/// Channel matrices (`N x n_rx`) at the given subcarrier indices:
/// `h_n = sum_p g_p a_tx(p) a_rx(p)^H exp(-j 2 pi f_n tau_p)`.
pub fn synthesize_channel(
    ant: &AntennaConfig,
    ofdm: &OfdmConfig,
    n_rx: usize,
    paths: &MultipathRealization,
    subcarriers: &[usize],
) -> Result<Vec<CMatrix>> {
    if n_rx == 0 {
        return Err(Error::Config("need at least one receive antenna".into()));
    }
    paths.validate()?;
    let n = ant.n();
    let responses: Vec<(Vec<C64>, Vec<C64>)> = paths
        .paths
        .iter()
        .map(|p| {
            let tx = tx_response(ant, p);
            let rx: Vec<C64> = rx_response(n_rx, p.rx_angle)
                .into_iter()
                .map(|z| z.conj())
                .collect();
            (tx, rx)
        })
        .collect();
    Ok(subcarriers
        .iter()
        .map(|&sc| {
            let f = ofdm.subcarrier_freq(sc);
            let mut h = CMatrix::zeros(n, n_rx);
            for (p, (tx, rx)) in paths.paths.iter().zip(&responses) {
                let coef = p.gain * C64::from_polar(1.0, -2.0 * PI * f * p.delay_s);
                for (i, &t) in tx.iter().enumerate() {
                    let ct = coef * t;
                    for (j, &r) in rx.iter().enumerate() {
                        h[(i, j)] += ct * r;
                    }
                }
            }
            h
        })
        .collect())
}

/// One channel per RB, taken at each RB's centre subcarrier.
pub fn rb_channels(
    ant: &AntennaConfig,
    ofdm: &OfdmConfig,
    n_rx: usize,
    paths: &MultipathRealization,
) -> Result<Vec<CMatrix>> {
    let scs: Vec<usize> = (0..ofdm.rbs).map(|rb| ofdm.rb_center_subcarrier(rb)).collect();
    synthesize_channel(ant, ofdm, n_rx, paths, &scs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn realization_is_normalized_and_causal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = ChannelModel::default();
        for _ in 0..20 {
            let r = realize(&model, &mut rng);
            assert_eq!(r.paths.len(), 8);
            assert!((r.total_power() - 1.0).abs() < 1e-12);
            assert!(r.paths.iter().all(|p| p.delay_s >= 0.0));
        }
    }

    #[test]
    fn single_path_zero_delay_is_flat() {
        let ant = AntennaConfig::new(4, 1).unwrap();
        let ofdm = OfdmConfig::default();
        let r = MultipathRealization {
            paths: vec![Path {
                gain: C64::new(0.6, 0.8),
                delay_s: 0.0,
                azimuth: 0.3,
                zenith: PI / 2.0,
                rx_angle: -0.2,
                pol_phase: 1.0,
            }],
        };
        let hs = synthesize_channel(&ant, &ofdm, 2, &r, &[0, 5, 100, 623]).unwrap();
        for h in &hs[1..] {
            assert_eq!(h, &hs[0]);
        }
        assert_eq!(hs[0].rows(), 8);
        assert_eq!(hs[0].cols(), 2);
    }

    #[test]
    fn lower_half_is_rotated_copy() {
        let ant = AntennaConfig::new(3, 2).unwrap();
        let p = Path {
            gain: C64::new(1.0, 0.0),
            delay_s: 0.0,
            azimuth: 0.4,
            zenith: 1.3,
            rx_angle: 0.0,
            pol_phase: 0.7,
        };
        let a = tx_response(&ant, &p);
        let rot = C64::from_polar(1.0, 0.7);
        for i in 0..6 {
            assert!((a[i + 6] - a[i] * rot).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_zero_rx() {
        let ant = AntennaConfig::default();
        let r = realize(&ChannelModel::default(), &mut ChaCha8Rng::seed_from_u64(0));
        assert!(synthesize_channel(&ant, &OfdmConfig::default(), 0, &r, &[0]).is_err());
    }
}
