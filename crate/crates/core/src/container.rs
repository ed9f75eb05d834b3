//! Self-describing binary container shared by the weights and factor-table
//! files.
//!
//! ```text
//! offset  size  field
//! 0       8     magic tag (identifies the file kind)
//! 8       4     version, u32 LE
//! 12      4     header length H, u32 LE
//! 16      H     UTF-8 JSON metadata header
//! 16+H    1     payload dtype: 4 = f32, 8 = f64
//! 17+H    3     reserved, zero
//! 20+H    8     payload element count N, u64 LE
//! 28+H    N*s   payload, little-endian
//! ```

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub(crate) const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Payload {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

pub(crate) fn encode<H: Serialize>(magic: &[u8; 8], header: &H, payload: &Payload) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(header).map_err(|e| Error::parse(e.to_string()))?;
    let mut out = Vec::with_capacity(32 + header.len());
    out.extend_from_slice(magic);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    match payload {
        Payload::F32(v) => {
            out.extend_from_slice(&[4, 0, 0, 0]);
            out.extend_from_slice(&(v.len() as u64).to_le_bytes());
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        Payload::F64(v) => {
            out.extend_from_slice(&[8, 0, 0, 0]);
            out.extend_from_slice(&(v.len() as u64).to_le_bytes());
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    Ok(out)
}

pub(crate) fn decode<H: DeserializeOwned>(bytes: &[u8], magic: &[u8; 8]) -> Result<(H, Payload)> {
    let mut r = Reader::new(bytes);
    let tag = r.take(8)?;
    if tag != magic {
        return Err(Error::parse(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(tag),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: VERSION,
        });
    }
    let header_len = r.u32()? as usize;
    let header: H =
        serde_json::from_slice(r.take(header_len)?).map_err(|e| Error::parse(format!("malformed header: {e}")))?;
    let dtype = r.take(4)?[0];
    let count = r.u64()? as usize;
    let payload = match dtype {
        4 => Payload::F32(
            r.take(
                count
                    .checked_mul(4)
                    .ok_or_else(|| Error::parse("payload size overflow"))?,
            )?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        ),
        8 => Payload::F64(
            r.take(
                count
                    .checked_mul(8)
                    .ok_or_else(|| Error::parse("payload size overflow"))?,
            )?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        ),
        other => return Err(Error::parse(format!("unknown payload dtype {other}"))),
    };
    if !r.is_at_end() {
        return Err(Error::parse("trailing bytes after payload"));
    }
    Ok((header, payload))
}

/// Bounds-checked little-endian cursor.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::parse(format!(
                    "truncated input: need {n} bytes at offset {}, have {}",
                    self.pos,
                    self.bytes.len() - self.pos
                ))
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn u32s(&mut self, n: usize) -> Result<Vec<u32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| Error::parse("length overflow"))?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub(crate) fn u64s(&mut self, n: usize) -> Result<Vec<u64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::parse("length overflow"))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub(crate) fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| Error::parse("length overflow"))?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub(crate) fn is_at_end(&self) -> bool {
        self.pos == self.bytes.len()
    }
}
