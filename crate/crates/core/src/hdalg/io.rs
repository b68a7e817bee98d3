//! Hypervector serialization.
//!
//! Binary layout, all integers and floats little-endian:
//!
//! | bytes | field                                   |
//! |-------|-----------------------------------------|
//! | 4     | magic `GHRR`                            |
//! | 4     | version (u32)                           |
//! | 8     | D (u64)                                 |
//! | 8     | m (u64)                                 |
//! | 1     | unitary flag (0 or 1)                   |
//! | ...   | `D*m*m` entries as `re, im` f64 pairs   |
//!
//! Entries are element-major, each element row-major.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Hypervector;
use crate::error::{GhrrError, Result};
use crate::matalg::ComplexMatrix;

pub const BINARY_MAGIC: [u8; 4] = *b"GHRR";
pub const BINARY_VERSION: u32 = 1;

/// Refuse headers that would allocate more than this many entries.
const MAX_ENTRIES: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypervectorJson {
    pub version: u32,
    pub dim_d: usize,
    pub dim_m: usize,
    pub unitary: bool,
    pub elements: Vec<ComplexMatrix>,
}

impl Hypervector {
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&BINARY_MAGIC)?;
        w.write_all(&BINARY_VERSION.to_le_bytes())?;
        w.write_all(&(self.dim_d as u64).to_le_bytes())?;
        w.write_all(&(self.dim_m as u64).to_le_bytes())?;
        w.write_all(&[u8::from(self.unitary)])?;
        let mut buf = Vec::with_capacity(self.data.len() * 16);
        for z in &self.data {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(25 + self.data.len() * 16);
        self.write_binary(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != BINARY_MAGIC {
            return Err(GhrrError::Format("bad magic; not a GHRR hypervector".into()));
        }
        let version = u32::from_le_bytes(read_array(&mut r)?);
        if version != BINARY_VERSION {
            return Err(GhrrError::Format(format!("unsupported version {version}")));
        }
        let d = u64::from_le_bytes(read_array(&mut r)?);
        let m = u64::from_le_bytes(read_array(&mut r)?);
        let [flag] = read_array::<_, 1>(&mut r)?;
        if flag > 1 {
            return Err(GhrrError::Format(format!("unitary flag must be 0 or 1, got {flag}")));
        }
        let count = d
            .checked_mul(m)
            .and_then(|x| x.checked_mul(m))
            .filter(|&c| c <= MAX_ENTRIES)
            .ok_or_else(|| GhrrError::Format(format!("implausible shape D={d}, m={m}")))?;
        let mut raw = vec![0u8; count as usize * 16];
        r.read_exact(&mut raw)?;
        let data = raw
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                )
            })
            .collect();
        Self::from_raw(d as usize, m as usize, data, flag == 1)
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        Self::read_binary(bytes)
    }

    pub fn to_json_repr(&self) -> HypervectorJson {
        HypervectorJson {
            version: BINARY_VERSION,
            dim_d: self.dim_d,
            dim_m: self.dim_m,
            unitary: self.unitary,
            elements: self.elements(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_json_repr())?)
    }

    pub fn from_json_repr(repr: HypervectorJson) -> Result<Self> {
        if repr.version != BINARY_VERSION {
            return Err(GhrrError::Format(format!("unsupported version {}", repr.version)));
        }
        if repr.elements.len() != repr.dim_d {
            return Err(GhrrError::Format(format!(
                "dim_d is {} but {} elements were given",
                repr.dim_d,
                repr.elements.len()
            )));
        }
        let mut data = Vec::with_capacity(repr.dim_d * repr.dim_m * repr.dim_m);
        for e in &repr.elements {
            if e.dim() != repr.dim_m {
                return Err(GhrrError::DimensionMismatch {
                    left: repr.dim_m,
                    right: e.dim(),
                });
            }
            data.extend_from_slice(e.as_slice());
        }
        Self::from_raw(repr.dim_d, repr.dim_m, data, repr.unitary)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_json_repr(serde_json::from_str(s)?)
    }
}

impl From<Hypervector> for HypervectorJson {
    fn from(h: Hypervector) -> Self {
        h.to_json_repr()
    }
}

impl TryFrom<HypervectorJson> for Hypervector {
    type Error = GhrrError;
    fn try_from(repr: HypervectorJson) -> Result<Self> {
        Self::from_json_repr(repr)
    }
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}
