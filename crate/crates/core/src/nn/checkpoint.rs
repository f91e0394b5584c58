//! Binary model checkpoints.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic        8 bytes  "PDNCKPT1"
//! arch_hash    u64      hash of the architecture description
//! gamma        f64      compression ratio
//! beta         u32      quantizer bits
//! n            u32      antenna ports
//! k            u32      subbands
//! block_count  u32
//! block_count times:
//!   name_len   u16, name (UTF-8)
//!   rank       u8,  dims (u32 each)
//!   data       f32 x product(dims)
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"PDNCKPT1";

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub arch_hash: u64,
    pub gamma: f64,
    pub beta: u32,
    pub n: u32,
    pub k: u32,
    pub blocks: Vec<Block>,
}

/// FNV-1a, stable across platforms and toolchains.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Checkpoint {
    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.arch_hash.to_le_bytes());
        out.extend_from_slice(&self.gamma.to_le_bytes());
        out.extend_from_slice(&self.beta.to_le_bytes());
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&self.k.to_le_bytes());
        out.extend_from_slice(&(self.blocks.len() as u32).to_le_bytes());
        for b in &self.blocks {
            out.extend_from_slice(&(b.name.len() as u16).to_le_bytes());
            out.extend_from_slice(b.name.as_bytes());
            out.push(b.dims.len() as u8);
            for &d in &b.dims {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for &v in &b.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        let magic = r.take(8)?;
        if magic != MAGIC {
            return Err(Error::Version {
                expected: String::from_utf8_lossy(MAGIC).into_owned(),
                found: String::from_utf8_lossy(magic).into_owned(),
            });
        }
        let arch_hash = u64::from_le_bytes(r.array()?);
        let gamma = f64::from_le_bytes(r.array()?);
        let beta = u32::from_le_bytes(r.array()?);
        let n = u32::from_le_bytes(r.array()?);
        let k = u32::from_le_bytes(r.array()?);
        let count = u32::from_le_bytes(r.array()?) as usize;
        let mut blocks = Vec::with_capacity(count.min(4096));
        for _ in 0..count {
            let len = u16::from_le_bytes(r.array()?) as usize;
            let name = String::from_utf8(r.take(len)?.to_vec())
                .map_err(|_| Error::Format("block name is not UTF-8".into()))?;
            let rank = r.take(1)?[0] as usize;
            let dims = (0..rank)
                .map(|_| Ok(u32::from_le_bytes(r.array()?) as usize))
                .collect::<Result<Vec<_>>>()?;
            let numel: usize = dims.iter().product();
            let raw = r.take(numel * 4)?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            blocks.push(Block { name, dims, data });
        }
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after last block".into()));
        }
        Ok(Checkpoint {
            arch_hash,
            gamma,
            beta,
            n,
            k,
            blocks,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut f = fs::File::open(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingArtifact(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let mut buf = Vec::new();
        f.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format(format!(
                "truncated checkpoint: wanted {n} bytes at offset {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
}
