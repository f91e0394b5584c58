use std::f64::consts::TAU;

use crate::channel::C64;

/// Coefficient quantization. With `quantized == false` coefficients are kept
/// at full precision and reconstructions are returned unnormalized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuantConfig {
    pub quantized: bool,
    pub amplitude_bits: u32,
    pub phase_bits: u32,
}

impl Default for QuantConfig {
    fn default() -> Self {
        QuantConfig {
            quantized: true,
            amplitude_bits: 3,
            phase_bits: 3,
        }
    }
}

/// Bits charged per real number when coefficients are not quantized.
pub const FULL_PRECISION_BITS: u32 = 32;

impl QuantConfig {
    pub fn unquantized() -> Self {
        QuantConfig {
            quantized: false,
            ..Default::default()
        }
    }

    /// Amplitude levels: zero plus `2^b - 1` steps of -3 dB from one.
    pub fn amplitude_levels(&self) -> Vec<f64> {
        let n = 1usize << self.amplitude_bits;
        let mut levels = vec![0.0];
        levels.extend((0..n - 1).map(|j| 2f64.powf(-(j as f64) / 2.0)));
        levels
    }

    /// Nearest amplitude level (ties to the lower index in level order).
    pub fn quantize_amplitude(&self, a: f64) -> f64 {
        if !self.quantized {
            return a;
        }
        let levels = self.amplitude_levels();
        let mut best = levels[0];
        for &l in &levels[1..] {
            if (a - l).abs() < (a - best).abs() {
                best = l;
            }
        }
        best
    }

    /// Nearest point of a `2^b`-PSK constellation.
    pub fn quantize_phase(&self, phi: f64) -> f64 {
        if !self.quantized {
            return phi;
        }
        let n = (1u64 << self.phase_bits) as f64;
        let step = TAU / n;
        ((phi.rem_euclid(TAU) / step).round() % n) * step
    }

    pub fn quantize(&self, z: C64) -> C64 {
        if !self.quantized {
            return z;
        }
        C64::from_polar(self.quantize_amplitude(z.norm()), self.quantize_phase(z.arg()))
    }

    pub fn amplitude_field(&self) -> u64 {
        if self.quantized {
            self.amplitude_bits as u64
        } else {
            FULL_PRECISION_BITS as u64
        }
    }

    pub fn phase_field(&self) -> u64 {
        if self.quantized {
            self.phase_bits as u64
        } else {
            FULL_PRECISION_BITS as u64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels() {
        let q = QuantConfig::default();
        let l = q.amplitude_levels();
        assert_eq!(l.len(), 8);
        assert_eq!(l[0], 0.0);
        assert_eq!(l[1], 1.0);
        assert!((l[7] - 0.125).abs() < 1e-15);
        assert_eq!(q.quantize_amplitude(0.95), 1.0);
        assert_eq!(q.quantize_amplitude(0.01), 0.0);
    }

    #[test]
    fn psk_grid() {
        let q = QuantConfig::default();
        assert_eq!(q.quantize_phase(0.1), 0.0);
        assert!((q.quantize_phase(TAU / 8.0 + 0.05) - TAU / 8.0).abs() < 1e-15);
        assert_eq!(q.quantize_phase(TAU - 0.01), 0.0);
        assert!((q.quantize_phase(-TAU / 4.0) - 3.0 * TAU / 4.0).abs() < 1e-12);
    }

    #[test]
    fn unquantized_is_identity() {
        let q = QuantConfig::unquantized();
        let z = C64::new(0.3, -0.7);
        assert_eq!(q.quantize(z), z);
    }
}
