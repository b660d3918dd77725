//! Fixed-size little-endian header followed by the arithmetic-coded payload.
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 4    | magic `BCS1`                  |
//! | 4      | 1    | format version (1)            |
//! | 5      | 1    | PRNG id (1)                   |
//! | 6      | 2    | width                         |
//! | 8      | 2    | height                        |
//! | 10     | 1    | block size B                  |
//! | 11     | 2    | measurements per block M_B    |
//! | 13     | 8    | quantizer step (binary64)     |
//! | 21     | 8    | matrix seed                   |
//! | 29     | 1    | scheme id                     |
//! | 30     | 4    | payload length in bytes       |

use crate::error::{Error, Result};
use crate::rng::PRNG_ID_XOSHIRO_BOX_MULLER;

pub const MAGIC: [u8; 4] = *b"BCS1";
pub const FORMAT_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 34;

/// Entropy coding scheme recorded in the header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Single-context significance / level coding without a last flag.
    Proposed = 0,
    /// Position- and history-dependent contexts with a last-significant flag.
    CabacStyle = 1,
}

impl Scheme {
    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(Scheme::Proposed),
            1 => Some(Scheme::CabacStyle),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Header {
    pub version: u8,
    pub prng_id: u8,
    /// Original image width; the coded grid is padded up to a multiple of B.
    pub width: u16,
    pub height: u16,
    pub block_size: u8,
    pub measurements: u16,
    pub quant_step: f64,
    pub seed: u64,
    pub scheme: Scheme,
}

impl Header {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.width == 0 || self.height == 0 {
            return bad(format!("zero image dimension {}x{}", self.width, self.height));
        }
        if self.block_size == 0 {
            return bad("zero block size".into());
        }
        let cols = usize::from(self.block_size).pow(2);
        if self.measurements == 0 || usize::from(self.measurements) > cols {
            return bad(format!("{} measurements for {cols}-pixel blocks", self.measurements));
        }
        if !(self.quant_step.is_finite() && self.quant_step > 0.0) {
            return bad(format!("quantizer step {}", self.quant_step));
        }
        Ok(())
    }

    pub fn block_count(&self) -> usize {
        let b = usize::from(self.block_size);
        usize::from(self.width).div_ceil(b) * usize::from(self.height).div_ceil(b)
    }

    pub fn pixel_count(&self) -> usize {
        usize::from(self.width) * usize::from(self.height)
    }
}

/// A header and its payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub header: Header,
    pub payload: Vec<u8>,
}

impl Container {
    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(h.version);
        out.push(h.prng_id);
        out.extend_from_slice(&h.width.to_le_bytes());
        out.extend_from_slice(&h.height.to_le_bytes());
        out.push(h.block_size);
        out.extend_from_slice(&h.measurements.to_le_bytes());
        out.extend_from_slice(&h.quant_step.to_le_bytes());
        out.extend_from_slice(&h.seed.to_le_bytes());
        out.push(h.scheme.id());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses exactly one container that must span all of `bytes`.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (c, used) = Self::parse_at(bytes, 0)?;
        if used != bytes.len() {
            return Err(Error::Corrupt(format!(
                "{} trailing bytes after container at byte offset {used}",
                bytes.len() - used
            )));
        }
        Ok(c)
    }

    /// Parses the container starting at `base`; returns it and the offset just past it.
    pub fn parse_at(bytes: &[u8], base: usize) -> Result<(Self, usize)> {
        let field = |off: usize, len: usize| -> Result<&[u8]> {
            bytes.get(base + off..base + off + len).ok_or(Error::Truncated {
                offset: bytes.len().max(base),
            })
        };
        if field(0, 4)? != MAGIC {
            return Err(Error::BadMagic { offset: base });
        }
        let version = field(4, 1)?[0];
        if version != FORMAT_VERSION {
            return Err(Error::Unsupported {
                field: "format version",
                value: version.into(),
                offset: base + 4,
            });
        }
        let prng_id = field(5, 1)?[0];
        if prng_id != PRNG_ID_XOSHIRO_BOX_MULLER {
            return Err(Error::Unsupported {
                field: "PRNG id",
                value: prng_id.into(),
                offset: base + 5,
            });
        }
        let u16_at = |off| field(off, 2).map(|b| u16::from_le_bytes([b[0], b[1]]));
        let u64_at = |off| field(off, 8).map(|b| u64::from_le_bytes(b.try_into().unwrap()));
        let width = u16_at(6)?;
        let height = u16_at(8)?;
        let block_size = field(10, 1)?[0];
        let measurements = u16_at(11)?;
        let quant_step = f64::from_bits(u64_at(13)?);
        let seed = u64_at(21)?;
        let scheme_id = field(29, 1)?[0];
        let scheme = Scheme::from_id(scheme_id).ok_or(Error::Unsupported {
            field: "scheme id",
            value: scheme_id.into(),
            offset: base + 29,
        })?;
        let len_bytes = field(30, 4)?;
        let payload_len = u32::from_le_bytes(len_bytes.try_into().unwrap()) as usize;
        let header = Header {
            version,
            prng_id,
            width,
            height,
            block_size,
            measurements,
            quant_step,
            seed,
            scheme,
        };
        header
            .validate()
            .map_err(|e| Error::Corrupt(format!("header at byte offset {base}: {e}")))?;
        let start = base + HEADER_LEN;
        let payload = bytes
            .get(start..start + payload_len)
            .ok_or(Error::Truncated { offset: bytes.len() })?
            .to_vec();
        Ok((Self { header, payload }, start + payload_len))
    }
}

/// Splits a concatenation of containers back into its parts.
pub fn split_containers(bytes: &[u8]) -> Result<Vec<Container>> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let (c, next) = Container::parse_at(bytes, pos)?;
        out.push(c);
        pos = next;
    }
    Ok(out)
}
