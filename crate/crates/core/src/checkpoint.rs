//! Model checkpoint format: named parameter segments with f32 payloads.
//!
//! Layout (little-endian throughout):
//!
//! ```text
//! magic "PMGA" | version u32 | segment count u32
//! per segment: name len u32 | name utf-8 | rank u32 | dims u32 × rank
//!              | payload f32 × prod(dims)
//! ```
//!
//! Payloads are always f32 on disk; higher-precision snapshots are
//! narrowed on save and widened on load. Non-finite payload values are
//! rejected on load, which also catches most random byte damage.

use std::fs;
use std::path::Path;

use crate::archive::ByteReader;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::snapshot::{ParameterSnapshot, Segment};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"PMGA";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Serializes a snapshot into the checkpoint byte layout.
pub fn encode_checkpoint<S: Scalar>(snapshot: &ParameterSnapshot<S>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(snapshot.segments().len() as u32).to_le_bytes());
    for seg in snapshot.segments() {
        out.extend_from_slice(&(seg.name.len() as u32).to_le_bytes());
        out.extend_from_slice(seg.name.as_bytes());
        out.extend_from_slice(&(seg.dims.len() as u32).to_le_bytes());
        for &d in &seg.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &seg.data {
            out.extend_from_slice(&v.as_f32().to_le_bytes());
        }
    }
    out
}

/// Parses the checkpoint byte layout.
pub fn decode_checkpoint<S: Scalar>(bytes: &[u8], tag: &str) -> Result<ParameterSnapshot<S>> {
    let mut r = ByteReader::new(bytes);
    let magic = r.take(4, "magic")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:02x?}, expected {:02x?} (\"PMGA\")",
            magic, CHECKPOINT_MAGIC
        )));
    }
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {version}, expected {CHECKPOINT_VERSION}"
        )));
    }
    let count = r.u32("segment count")?;
    let mut segments = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let name = r.string("segment name")?;
        let rank = r.u32("rank")?;
        let mut dims = Vec::with_capacity(rank as usize);
        for _ in 0..rank {
            dims.push(r.u32("dim")? as usize);
        }
        let n: usize = dims.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            let at = r.offset();
            let v = f32::from_le_bytes(r.array::<4>("f32 payload")?);
            if !v.is_finite() {
                return Err(Error::Corruption {
                    offset: at,
                    reason: format!("non-finite parameter value {v} in segment {name}"),
                });
            }
            data.push(S::of_f32(v));
        }
        segments.push(Segment::new(name, dims, data));
    }
    if !r.is_exhausted() {
        return Err(Error::Corruption {
            offset: r.offset(),
            reason: format!("{} trailing bytes after last segment", r.remaining()),
        });
    }
    Ok(ParameterSnapshot::new(tag, segments))
}

/// Writes a snapshot as a checkpoint file.
pub fn save_checkpoint<S: Scalar>(path: &Path, snapshot: &ParameterSnapshot<S>) -> Result<()> {
    fs::write(path, encode_checkpoint(snapshot))?;
    Ok(())
}

/// Loads a checkpoint file; `tag` becomes the snapshot's source tag.
pub fn load_checkpoint<S: Scalar>(path: &Path, tag: &str) -> Result<ParameterSnapshot<S>> {
    let bytes = fs::read(path)?;
    decode_checkpoint(&bytes, tag)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ParameterSnapshot<f32> {
        ParameterSnapshot::new(
            "test",
            vec![
                Segment::new("w1", vec![2, 3], vec![0.5, -1.25, 0.0, 3.5, 2.0, -0.125]),
                Segment::new("b1", vec![3], vec![0.1, 0.2, 0.3]),
            ],
        )
    }

    #[test]
    fn round_trip_preserves_f32_bits() {
        let snap = sample();
        let bytes = encode_checkpoint(&snap);
        let back: ParameterSnapshot<f32> = decode_checkpoint(&bytes, "test").unwrap();
        assert!(snap.bit_eq(&back));
        assert_eq!(encode_checkpoint(&back), bytes);
    }

    #[test]
    fn f64_snapshots_narrow_to_f32_on_disk() {
        let snap64 =
            ParameterSnapshot::new("t", vec![Segment::new("w", vec![2], vec![0.1f64, 0.2])]);
        let bytes = encode_checkpoint(&snap64);
        let back: ParameterSnapshot<f64> = decode_checkpoint(&bytes, "t").unwrap();
        assert_eq!(back.segments()[0].data[0], 0.1f32 as f64);
    }

    #[test]
    fn header_layout_is_pinned() {
        let empty: ParameterSnapshot<f32> = ParameterSnapshot::new("e", vec![]);
        let bytes = encode_checkpoint(&empty);
        assert_eq!(&bytes[0..4], b"PMGA");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &0u32.to_le_bytes());
    }

    #[test]
    fn bad_magic_and_version_are_format_errors() {
        let mut bytes = encode_checkpoint(&sample());
        bytes[3] = b'X';
        assert!(matches!(
            decode_checkpoint::<f32>(&bytes, "t"),
            Err(Error::Format(_))
        ));
        let mut bytes = encode_checkpoint(&sample());
        bytes[4] = 99;
        assert!(matches!(
            decode_checkpoint::<f32>(&bytes, "t"),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn truncation_and_nan_payloads_are_corruption_errors() {
        let bytes = encode_checkpoint(&sample());
        assert!(matches!(
            decode_checkpoint::<f32>(&bytes[..bytes.len() - 2], "t"),
            Err(Error::Corruption { .. })
        ));

        let mut bytes = encode_checkpoint(&sample());
        let n = bytes.len();
        // Overwrite the final f32 with a NaN bit pattern.
        bytes[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            decode_checkpoint::<f32>(&bytes, "t"),
            Err(Error::Corruption { .. })
        ));
    }
}
