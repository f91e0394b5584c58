use serde::Deserialize;

use crate::error::{Error, Result};

/// Dual-polarized planar array: `n1 x n2` ports per polarization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AntennaConfig {
    pub n1: usize,
    pub n2: usize,
}

impl Default for AntennaConfig {
    fn default() -> Self {
        AntennaConfig { n1: 16, n2: 1 }
    }
}

impl AntennaConfig {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::Config(format!(
                "antenna ports must be positive, got n1={n1} n2={n2}"
            )));
        }
        Ok(AntennaConfig { n1, n2 })
    }

    /// Ports per polarization.
    pub fn ports_per_pol(&self) -> usize {
        self.n1 * self.n2
    }

    /// Total transmit ports, both polarizations.
    pub fn n(&self) -> usize {
        2 * self.ports_per_pol()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OfdmConfig {
    pub rbs: usize,
    pub subband_rb: usize,
    pub subcarrier_spacing_hz: f64,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        OfdmConfig {
            rbs: 52,
            subband_rb: 4,
            subcarrier_spacing_hz: 15e3,
        }
    }
}

impl OfdmConfig {
    pub const SUBCARRIERS_PER_RB: usize = 12;

    pub fn new(rbs: usize, subband_rb: usize, subcarrier_spacing_hz: f64) -> Result<Self> {
        if rbs == 0 || subband_rb == 0 || subcarrier_spacing_hz <= 0.0 {
            return Err(Error::Config(format!(
                "invalid OFDM numerology: rbs={rbs} subband_rb={subband_rb} scs={subcarrier_spacing_hz}"
            )));
        }
        Ok(OfdmConfig {
            rbs,
            subband_rb,
            subcarrier_spacing_hz,
        })
    }

    pub fn subcarriers(&self) -> usize {
        self.rbs * Self::SUBCARRIERS_PER_RB
    }

    /// `K = ceil(rbs / subband_rb)`.
    pub fn subbands(&self) -> usize {
        self.rbs.div_ceil(self.subband_rb)
    }

    /// RB indices belonging to subband `k`; the last one may be short.
    pub fn subband_rbs(&self, k: usize) -> std::ops::Range<usize> {
        let start = k * self.subband_rb;
        start.min(self.rbs)..((k + 1) * self.subband_rb).min(self.rbs)
    }

    /// Index of the subcarrier used to represent RB `rb`.
    pub fn rb_center_subcarrier(&self, rb: usize) -> usize {
        rb * Self::SUBCARRIERS_PER_RB + Self::SUBCARRIERS_PER_RB / 2
    }

    pub fn subcarrier_freq(&self, n: usize) -> f64 {
        n as f64 * self.subcarrier_spacing_hz
    }
}

/// Statistics of the clustered multipath generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelModel {
    pub n_rx: usize,
    pub paths: usize,
    pub clusters: usize,
    /// Standard deviation of path azimuths around their cluster centre.
    pub angle_spread_deg: f64,
    /// Half-width of the uniform range of cluster centre azimuths.
    pub azimuth_range_deg: f64,
    /// Mean excess delay of the exponential cluster-delay profile.
    pub delay_spread_s: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            n_rx: 4,
            paths: 8,
            clusters: 2,
            angle_spread_deg: 8.0,
            azimuth_range_deg: 60.0,
            delay_spread_s: 300e-9,
        }
    }
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        if self.n_rx == 0 || self.paths == 0 || self.clusters == 0 {
            return Err(Error::Config(
                "n_rx, paths and clusters must be positive".into(),
            ));
        }
        if self.clusters > self.paths {
            return Err(Error::Config(format!(
                "{} clusters cannot hold only {} paths",
                self.clusters, self.paths
            )));
        }
        if self.angle_spread_deg < 0.0 || self.delay_spread_s < 0.0 {
            return Err(Error::Config("spreads must be non-negative".into()));
        }
        Ok(())
    }
}

/// Dataset generation settings as read from a key-value config file.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    #[serde(default = "d_n1")]
    pub n1: usize,
    #[serde(default = "d_n2")]
    pub n2: usize,
    #[serde(default = "d_n_rx")]
    pub n_rx: usize,
    #[serde(default = "d_rbs")]
    pub rbs: usize,
    #[serde(default = "d_subband_rb")]
    pub subband_rb: usize,
    #[serde(default = "d_paths")]
    pub paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_samples")]
    pub samples: usize,
    #[serde(default = "d_clusters")]
    pub clusters: usize,
    #[serde(default = "d_angle_spread")]
    pub angle_spread_deg: f64,
    #[serde(default = "d_azimuth_range")]
    pub azimuth_range_deg: f64,
    #[serde(default = "d_delay_spread")]
    pub delay_spread_ns: f64,
    #[serde(default = "d_scs")]
    pub subcarrier_spacing_khz: f64,
}

fn d_n1() -> usize {
    16
}
fn d_n2() -> usize {
    1
}
fn d_n_rx() -> usize {
    4
}
fn d_rbs() -> usize {
    52
}
fn d_subband_rb() -> usize {
    4
}
fn d_paths() -> usize {
    8
}
fn d_samples() -> usize {
    1000
}
fn d_clusters() -> usize {
    ChannelModel::default().clusters
}
fn d_angle_spread() -> f64 {
    ChannelModel::default().angle_spread_deg
}
fn d_azimuth_range() -> f64 {
    ChannelModel::default().azimuth_range_deg
}
fn d_delay_spread() -> f64 {
    ChannelModel::default().delay_spread_s * 1e9
}
fn d_scs() -> f64 {
    15.0
}

impl Default for GenerationConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields defaulted")
    }
}

impl GenerationConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn antenna(&self) -> Result<AntennaConfig> {
        AntennaConfig::new(self.n1, self.n2)
    }

    pub fn ofdm(&self) -> Result<OfdmConfig> {
        OfdmConfig::new(self.rbs, self.subband_rb, self.subcarrier_spacing_khz * 1e3)
    }

    pub fn model(&self) -> Result<ChannelModel> {
        let m = ChannelModel {
            n_rx: self.n_rx,
            paths: self.paths,
            clusters: self.clusters,
            angle_spread_deg: self.angle_spread_deg,
            azimuth_range_deg: self.azimuth_range_deg,
            delay_spread_s: self.delay_spread_ns * 1e-9,
        };
        m.validate()?;
        Ok(m)
    }
}
