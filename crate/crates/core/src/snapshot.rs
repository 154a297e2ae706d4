//! Flat named views of trainable parameters.
//!
//! Snapshots drive drift metrics, weight interpolation and checkpointing.
//! Segment order is part of the layout: two snapshots compare or combine
//! only when their (name, dims) sequences match exactly.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One named parameter tensor, flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment<S> {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<S>,
}

impl<S: Scalar> Segment<S> {
    pub fn new(name: impl Into<String>, dims: Vec<usize>, data: Vec<S>) -> Self {
        let seg = Segment { name: name.into(), dims, data };
        debug_assert_eq!(seg.dims.iter().product::<usize>(), seg.data.len());
        seg
    }
}

/// Ordered collection of named flat parameter segments.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSnapshot<S> {
    source_tag: String,
    segments: Vec<Segment<S>>,
}

impl<S: Scalar> ParameterSnapshot<S> {
    pub fn new(source_tag: impl Into<String>, segments: Vec<Segment<S>>) -> Self {
        ParameterSnapshot { source_tag: source_tag.into(), segments }
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    pub fn set_source_tag(&mut self, tag: impl Into<String>) {
        self.source_tag = tag.into();
    }

    pub fn segments(&self) -> &[Segment<S>] {
        &self.segments
    }

    /// The (name, dims) sequence that defines compatibility.
    pub fn layout(&self) -> Vec<(String, Vec<usize>)> {
        self.segments
            .iter()
            .map(|s| (s.name.clone(), s.dims.clone()))
            .collect()
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.segments.len() == other.segments.len()
            && self
                .segments
                .iter()
                .zip(&other.segments)
                .all(|(a, b)| a.name == b.name && a.dims == b.dims)
    }

    /// Total number of scalars across segments.
    pub fn total_len(&self) -> usize {
        self.segments.iter().map(|s| s.data.len()).sum()
    }

    /// Iterates all values in layout order.
    pub fn values(&self) -> impl Iterator<Item = S> + '_ {
        self.segments.iter().flat_map(|s| s.data.iter().copied())
    }

    /// Mutable access by flat index across the concatenated segments.
    pub fn value_mut(&mut self, flat_index: usize) -> &mut S {
        let mut rest = flat_index;
        for seg in &mut self.segments {
            if rest < seg.data.len() {
                return &mut seg.data[rest];
            }
            rest -= seg.data.len();
        }
        panic!("flat index {flat_index} out of range");
    }

    /// Exact bitwise equality of all values (layout included).
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.same_layout(other)
            && self
                .values()
                .zip(other.values())
                .all(|(a, b)| a.as_f64().to_bits() == b.as_f64().to_bits())
    }

    pub fn cast<T: Scalar>(&self) -> ParameterSnapshot<T> {
        ParameterSnapshot {
            source_tag: self.source_tag.clone(),
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    name: s.name.clone(),
                    dims: s.dims.clone(),
                    data: s.data.iter().map(|&v| T::of(v.as_f64())).collect(),
                })
                .collect(),
        }
    }

    pub(crate) fn check_same_layout(&self, other: &Self) -> Result<()> {
        if !self.same_layout(other) {
            return Err(Error::shape(format!(
                "snapshot layouts differ: [{}] vs [{}]",
                describe_layout(self),
                describe_layout(other)
            )));
        }
        Ok(())
    }
}

fn describe_layout<S: Scalar>(s: &ParameterSnapshot<S>) -> String {
    s.segments
        .iter()
        .map(|seg| format!("{}{:?}", seg.name, seg.dims))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Order-sensitive 64-bit digest of parameter values (f32 payload precision).
pub fn checksum_values<S: Scalar>(values: impl Iterator<Item = S>) -> u64 {
    let mut hasher = Sha256::new();
    for v in values {
        hasher.update(v.as_f32().to_le_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ParameterSnapshot<f64> {
        ParameterSnapshot::new(
            "init",
            vec![
                Segment::new("w", vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]),
                Segment::new("b", vec![2], vec![0.5, -0.5]),
            ],
        )
    }

    #[test]
    fn layout_comparison_checks_names_and_dims() {
        let a = sample();
        let mut b = sample();
        assert!(a.same_layout(&b));
        b.segments[1].dims = vec![1, 2];
        assert!(!a.same_layout(&b));
    }

    #[test]
    fn flat_indexing_crosses_segments() {
        let mut s = sample();
        *s.value_mut(5) = 9.0;
        assert_eq!(s.segments()[1].data[1], 9.0);
        assert_eq!(s.total_len(), 6);
    }

    #[test]
    fn checksum_is_order_sensitive() {
        let a = checksum_values([1.0f64, 2.0].into_iter());
        let b = checksum_values([2.0f64, 1.0].into_iter());
        assert_ne!(a, b);
        assert_eq!(a, checksum_values([1.0f64, 2.0].into_iter()));
    }
}
