//! Dataset files.
//!
//! ```text
//! magic     8 bytes "CSIDSET1"
//! version   u16
//! n         u16
//! k         u16
//! count     u32
//! count x (2 * n * k) f32   real plane then imaginary plane, row-major N x K
//! ```
//!
//! All fields little-endian.

use std::fs;
use std::path::Path;

use super::precoder::PrecoderChannelMatrix;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"CSIDSET1";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 8 + 2 + 2 + 2 + 4;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub n: usize,
    pub k: usize,
    pub samples: Vec<PrecoderChannelMatrix>,
}

impl Dataset {
    pub fn new(n: usize, k: usize, samples: Vec<PrecoderChannelMatrix>) -> Result<Self> {
        if let Some(bad) = samples.iter().find(|s| s.n() != n || s.k() != k) {
            return Err(Error::Contract(format!(
                "sample is {}x{}, dataset is {n}x{k}",
                bad.n(),
                bad.k()
            )));
        }
        Ok(Dataset { n, k, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Splits off the trailing `tail` samples.
    pub fn split_tail(mut self, tail: usize) -> (Dataset, Dataset) {
        let at = self.samples.len().saturating_sub(tail);
        let rest = self.samples.split_off(at);
        let (n, k) = (self.n, self.k);
        (self, Dataset { n, k, samples: rest })
    }

    pub fn file_len(n: usize, k: usize, count: usize) -> usize {
        HEADER_LEN + count * 2 * n * k * 4
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let (n, k) = (self.n, self.k);
        if n > u16::MAX as usize || k > u16::MAX as usize || self.len() > u32::MAX as usize {
            return Err(Error::Contract("dataset too large for the file format".into()));
        }
        let mut out = Vec::with_capacity(Self::file_len(n, k, self.len()));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(n as u16).to_le_bytes());
        out.extend_from_slice(&(k as u16).to_le_bytes());
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        for s in &self.samples {
            for v in s.to_planes() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!(
                "truncated dataset header ({} bytes)",
                bytes.len()
            )));
        }
        if &bytes[..8] != MAGIC {
            return Err(Error::Version {
                expected: String::from_utf8_lossy(MAGIC).into_owned(),
                found: String::from_utf8_lossy(&bytes[..8]).into_owned(),
            });
        }
        let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
        let version = u16_at(8);
        if version != VERSION {
            return Err(Error::Version {
                expected: VERSION.to_string(),
                found: version.to_string(),
            });
        }
        let n = u16_at(10) as usize;
        let k = u16_at(12) as usize;
        let count = u32::from_le_bytes([bytes[14], bytes[15], bytes[16], bytes[17]]) as usize;
        let expected = Self::file_len(n, k, count);
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "dataset declares {count} samples of {n}x{k} ({expected} bytes), file has {}",
                bytes.len()
            )));
        }
        let per = 2 * n * k;
        let samples = bytes[HEADER_LEN..]
            .chunks_exact(per * 4)
            .map(|chunk| {
                let planes: Vec<f64> = chunk
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                    .collect();
                PrecoderChannelMatrix::from_planes(n, k, &planes)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset { n, k, samples })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingArtifact(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::cmat::C64;

    fn tiny(count: usize) -> Dataset {
        let samples = (0..count)
            .map(|s| {
                let cols: Vec<Vec<C64>> = (0..3)
                    .map(|k| {
                        (0..4)
                            .map(|i| C64::new((s + i + k) as f64 * 0.1, -(i as f64) * 0.3))
                            .collect()
                    })
                    .collect();
                PrecoderChannelMatrix::from_columns(&cols)
            })
            .collect();
        Dataset::new(4, 3, samples).unwrap()
    }

    #[test]
    fn write_read_is_bit_identical() {
        let d = tiny(10);
        let bytes = d.to_bytes().unwrap();
        assert_eq!(bytes.len(), Dataset::file_len(4, 3, 10));
        let back = Dataset::from_bytes(&bytes).unwrap();
        assert_eq!(back.len(), 10);
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn rejects_wrong_magic_version_and_truncation() {
        let mut bytes = tiny(2).to_bytes().unwrap();
        let cut = bytes[..bytes.len() - 1].to_vec();
        assert!(matches!(Dataset::from_bytes(&cut), Err(Error::Format(_))));
        assert!(matches!(Dataset::from_bytes(&bytes[..5]), Err(Error::Format(_))));
        bytes[8] = 7;
        assert!(matches!(Dataset::from_bytes(&bytes), Err(Error::Version { .. })));
        bytes[0] = b'X';
        assert!(matches!(Dataset::from_bytes(&bytes), Err(Error::Version { .. })));
    }

    #[test]
    fn full_corpus_size() {
        assert_eq!(Dataset::file_len(32, 13, 70_000), 18 + 70_000 * 2 * 32 * 13 * 4);
    }

    #[test]
    fn inconsistent_shapes_rejected() {
        let mut d = tiny(2);
        d.samples.push(PrecoderChannelMatrix::from_columns(&[vec![C64::new(1.0, 0.0)]]));
        assert!(Dataset::new(4, 3, d.samples).is_err());
    }
}
