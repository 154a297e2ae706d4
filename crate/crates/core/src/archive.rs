//! Binary tensor archive: the on-disk container for dataset splits.
//!
//! Layout (little-endian throughout):
//!
//! ```text
//! magic "PMGT" | version u32 | tensor count u32
//! per tensor:  name len u32 | name utf-8 | rank u32 | dims u32 × rank
//!              | dtype u8 (0 = f32, 1 = u32) | payload
//! ```
//!
//! Structural damage (bad magic, bad version, truncation) surfaces as
//! typed errors carrying the byte offset where parsing stopped.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const ARCHIVE_MAGIC: [u8; 4] = *b"PMGT";
pub const ARCHIVE_VERSION: u32 = 1;

/// Payload of one stored tensor.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorPayload {
    F32(Vec<f32>),
    U32(Vec<u32>),
}

impl TensorPayload {
    pub fn len(&self) -> usize {
        match self {
            TensorPayload::F32(v) => v.len(),
            TensorPayload::U32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dtype_tag(&self) -> u8 {
        match self {
            TensorPayload::F32(_) => 0,
            TensorPayload::U32(_) => 1,
        }
    }
}

/// A named tensor with explicit dims.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub dims: Vec<u32>,
    pub payload: TensorPayload,
}

impl NamedTensor {
    pub fn new(name: impl Into<String>, dims: Vec<u32>, payload: TensorPayload) -> Result<Self> {
        let expected: u64 = dims.iter().map(|&d| u64::from(d)).product();
        if expected != payload.len() as u64 {
            return Err(Error::shape(format!(
                "dims {:?} imply {} elements but payload has {}",
                dims,
                expected,
                payload.len()
            )));
        }
        Ok(NamedTensor { name: name.into(), dims, payload })
    }
}

/// Serializes tensors into the archive byte layout.
pub fn encode_archive(tensors: &[NamedTensor]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&ARCHIVE_MAGIC);
    out.extend_from_slice(&ARCHIVE_VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        out.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
        for &d in &t.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        out.push(t.payload.dtype_tag());
        match &t.payload {
            TensorPayload::F32(v) => {
                for x in v {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            TensorPayload::U32(v) => {
                for x in v {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
    }
    out
}

/// Parses the archive byte layout.
pub fn decode_archive(bytes: &[u8]) -> Result<Vec<NamedTensor>> {
    let mut r = ByteReader::new(bytes);
    let magic = r.take(4, "magic")?;
    if magic != ARCHIVE_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:02x?}, expected {:02x?} (\"PMGT\")",
            magic, ARCHIVE_MAGIC
        )));
    }
    let version = r.u32("version")?;
    if version != ARCHIVE_VERSION {
        return Err(Error::Format(format!(
            "unsupported archive version {version}, expected {ARCHIVE_VERSION}"
        )));
    }
    let count = r.u32("tensor count")?;
    let mut tensors = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let name = r.string("tensor name")?;
        let rank = r.u32("rank")?;
        let mut dims = Vec::with_capacity(rank as usize);
        for _ in 0..rank {
            dims.push(r.u32("dim")?);
        }
        let n: u64 = dims.iter().map(|&d| u64::from(d)).product();
        let dtype = r.u8("dtype tag")?;
        let payload = match dtype {
            0 => {
                let mut v = Vec::with_capacity(n as usize);
                for _ in 0..n {
                    v.push(f32::from_le_bytes(r.array::<4>("f32 payload")?));
                }
                TensorPayload::F32(v)
            }
            1 => {
                let mut v = Vec::with_capacity(n as usize);
                for _ in 0..n {
                    v.push(u32::from_le_bytes(r.array::<4>("u32 payload")?));
                }
                TensorPayload::U32(v)
            }
            other => {
                return Err(Error::Corruption {
                    offset: r.offset() - 1,
                    reason: format!("unknown dtype tag {other}"),
                })
            }
        };
        tensors.push(NamedTensor { name, dims, payload });
    }
    if !r.is_exhausted() {
        return Err(Error::Corruption {
            offset: r.offset(),
            reason: format!("{} trailing bytes after last tensor", r.remaining()),
        });
    }
    Ok(tensors)
}

/// Writes tensors to a file.
pub fn write_archive(path: &Path, tensors: &[NamedTensor]) -> Result<()> {
    fs::write(path, encode_archive(tensors))?;
    Ok(())
}

/// Reads tensors from a file.
pub fn read_archive(path: &Path) -> Result<Vec<NamedTensor>> {
    let bytes = fs::read(path)?;
    decode_archive(&bytes)
}

/// Cursor over a byte slice that reports the failure offset on truncation.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, pos: 0 }
    }

    pub(crate) fn offset(&self) -> u64 {
        self.pos as u64
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn is_exhausted(&self) -> bool {
        self.pos == self.bytes.len()
    }

    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Corruption {
                offset: self.offset(),
                reason: format!(
                    "truncated while reading {what}: wanted {n} bytes, {} left",
                    self.remaining()
                ),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub(crate) fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().expect("sized take"))
    }

    pub(crate) fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array::<4>(what)?))
    }

    pub(crate) fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u32(what)? as usize;
        let start = self.offset();
        let bytes = self.take(len, what)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::Corruption {
            offset: start,
            reason: format!("{what} is not valid utf-8"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_tensors() -> Vec<NamedTensor> {
        vec![
            NamedTensor::new(
                "images",
                vec![2, 1, 2, 2],
                TensorPayload::F32(vec![0.0, 0.25, 0.5, 0.75, 1.0, 0.125, 0.375, 0.625]),
            )
            .unwrap(),
            NamedTensor::new("labels", vec![2], TensorPayload::U32(vec![0, 1])).unwrap(),
        ]
    }

    #[test]
    fn round_trip_is_bitwise() {
        let tensors = sample_tensors();
        let bytes = encode_archive(&tensors);
        let back = decode_archive(&bytes).unwrap();
        assert_eq!(tensors, back);
        assert_eq!(encode_archive(&back), bytes);
    }

    #[test]
    fn header_layout_is_pinned() {
        let bytes = encode_archive(&[]);
        assert_eq!(&bytes[0..4], b"PMGT");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &0u32.to_le_bytes());
        assert_eq!(bytes.len(), 12);
    }

    #[test]
    fn bad_magic_is_a_format_error() {
        let mut bytes = encode_archive(&sample_tensors());
        bytes[0] = b'X';
        assert!(matches!(decode_archive(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = encode_archive(&sample_tensors());
        let cut = bytes.len() - 3;
        match decode_archive(&bytes[..cut]) {
            Err(Error::Corruption { offset, .. }) => {
                assert!(offset as usize <= cut);
                assert!(offset > 0);
            }
            other => panic!("expected corruption error, got {other:?}"),
        }
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        let mut bytes = encode_archive(&sample_tensors());
        bytes.push(0xAB);
        assert!(matches!(
            decode_archive(&bytes),
            Err(Error::Corruption { .. })
        ));
    }

    #[test]
    fn unknown_dtype_is_rejected() {
        let tensors = vec![NamedTensor::new("t", vec![1], TensorPayload::U32(vec![7])).unwrap()];
        let mut bytes = encode_archive(&tensors);
        // dtype tag sits right before the 4-byte payload
        let tag_pos = bytes.len() - 5;
        bytes[tag_pos] = 9;
        assert!(matches!(
            decode_archive(&bytes),
            Err(Error::Corruption { .. })
        ));
    }
}
