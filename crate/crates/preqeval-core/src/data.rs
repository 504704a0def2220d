//! Datasets: ordered labeled examples over a fixed label space.
//!
//! The example order is the transmission order for online evaluation, so a
//! `Dataset` is a sequence, not a set. Construction validates every example
//! against the label space and feature spec; afterwards the invariants can be
//! assumed.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Lowercase hex of a 32-byte digest.
pub fn digest_hex(digest: &[u8; 32]) -> String {
    let mut out = String::with_capacity(64);
    for byte in digest {
        for nibble in [byte >> 4, byte & 0xf] {
            out.push(char::from_digit(nibble as u32, 16).expect("nibble < 16"));
        }
    }
    out
}

/// Number of classes K in a classification task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpace {
    num_classes: u32,
}

impl LabelSpace {
    pub fn new(num_classes: u32) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::LabelSpaceTooSmall { num_classes });
        }
        Ok(LabelSpace { num_classes })
    }

    pub fn num_classes(&self) -> u32 {
        self.num_classes
    }

    /// log2(K), the cost in bits of one uniformly coded label.
    pub fn uniform_bits(&self) -> f64 {
        libm::log2(self.num_classes as f64)
    }
}

/// Shape of the input side: dense real vectors or sparse token counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSpec {
    Dense { dim: u32 },
    Sparse { vocab: u32 },
}

impl FeatureSpec {
    /// Width of the input as seen by a linear map.
    pub fn input_dim(&self) -> usize {
        match self {
            FeatureSpec::Dense { dim } => *dim as usize,
            FeatureSpec::Sparse { vocab } => *vocab as usize,
        }
    }
}

/// One input: a dense vector or a sparse map of token index to count.
///
/// Sparse entries are sorted by index with strictly positive counts, which
/// makes the byte encoding canonical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureVector {
    Dense(Vec<f64>),
    Sparse(Vec<(u32, u32)>),
}

impl FeatureVector {
    pub fn conforms(&self, spec: &FeatureSpec) -> Result<()> {
        match (self, spec) {
            (FeatureVector::Dense(v), FeatureSpec::Dense { dim }) => {
                if v.len() != *dim as usize {
                    return Err(Error::FeatureMismatch(alloc::format!(
                        "dense vector of length {} against declared dimension {dim}",
                        v.len()
                    )));
                }
                Ok(())
            }
            (FeatureVector::Sparse(entries), FeatureSpec::Sparse { vocab }) => {
                let mut prev: Option<u32> = None;
                for &(idx, count) in entries {
                    if idx >= *vocab {
                        return Err(Error::FeatureMismatch(alloc::format!(
                            "token index {idx} outside vocabulary of size {vocab}"
                        )));
                    }
                    if count == 0 {
                        return Err(Error::FeatureMismatch(String::from(
                            "sparse entry with zero count",
                        )));
                    }
                    if let Some(p) = prev {
                        if idx <= p {
                            return Err(Error::FeatureMismatch(String::from(
                                "sparse indices must be strictly increasing",
                            )));
                        }
                    }
                    prev = Some(idx);
                }
                Ok(())
            }
            (FeatureVector::Dense(_), FeatureSpec::Sparse { .. }) => Err(Error::FeatureMismatch(
                String::from("dense features against a sparse feature spec"),
            )),
            (FeatureVector::Sparse(_), FeatureSpec::Dense { .. }) => Err(Error::FeatureMismatch(
                String::from("sparse features against a dense feature spec"),
            )),
        }
    }

    fn write_canonical(&self, out: &mut Vec<u8>) {
        match self {
            FeatureVector::Dense(v) => {
                out.push(0);
                out.extend_from_slice(&(v.len() as u64).to_le_bytes());
                for x in v {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            FeatureVector::Sparse(entries) => {
                out.push(1);
                out.extend_from_slice(&(entries.len() as u64).to_le_bytes());
                for (idx, count) in entries {
                    out.extend_from_slice(&idx.to_le_bytes());
                    out.extend_from_slice(&count.to_le_bytes());
                }
            }
        }
    }
}

/// A labeled input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub features: FeatureVector,
    pub label: u32,
}

impl Example {
    /// Canonical content hash, used for split-disjointness and overlap checks.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut bytes = Vec::new();
        self.features.write_canonical(&mut bytes);
        bytes.extend_from_slice(&self.label.to_le_bytes());
        Sha256::digest(&bytes).into()
    }
}

/// Ordered examples plus the metadata that fixes their interpretation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    examples: Vec<Example>,
    label_space: LabelSpace,
    feature_spec: FeatureSpec,
    task_id: String,
    ordering_seed: u64,
}

impl Dataset {
    pub fn new(
        examples: Vec<Example>,
        label_space: LabelSpace,
        feature_spec: FeatureSpec,
        task_id: String,
        ordering_seed: u64,
    ) -> Result<Self> {
        for (index, ex) in examples.iter().enumerate() {
            ex.features.conforms(&feature_spec)?;
            if ex.label >= label_space.num_classes() {
                return Err(Error::LabelOutOfRange {
                    index,
                    label: ex.label,
                    num_classes: label_space.num_classes(),
                });
            }
        }
        Ok(Dataset { examples, label_space, feature_spec, task_id, ordering_seed })
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn label_space(&self) -> LabelSpace {
        self.label_space
    }

    pub fn feature_spec(&self) -> FeatureSpec {
        self.feature_spec
    }

    pub fn task_id(&self) -> &str {
        &self.task_id
    }

    pub fn ordering_seed(&self) -> u64 {
        self.ordering_seed
    }

    /// A copy holding only the examples in `range`, same metadata.
    pub fn slice(&self, range: core::ops::Range<usize>) -> Dataset {
        Dataset {
            examples: self.examples[range].to_vec(),
            label_space: self.label_space,
            feature_spec: self.feature_spec,
            task_id: self.task_id.clone(),
            ordering_seed: self.ordering_seed,
        }
    }

    /// SHA-256 over a canonical byte encoding; equal digests mean equal
    /// datasets, including order.
    pub fn content_digest(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(b"PQDS\x01");
        hasher.update(self.label_space.num_classes().to_le_bytes());
        match self.feature_spec {
            FeatureSpec::Dense { dim } => {
                hasher.update([0u8]);
                hasher.update(dim.to_le_bytes());
            }
            FeatureSpec::Sparse { vocab } => {
                hasher.update([1u8]);
                hasher.update(vocab.to_le_bytes());
            }
        }
        hasher.update((self.task_id.len() as u64).to_le_bytes());
        hasher.update(self.task_id.as_bytes());
        hasher.update(self.ordering_seed.to_le_bytes());
        hasher.update((self.examples.len() as u64).to_le_bytes());
        let mut buf = Vec::new();
        for ex in &self.examples {
            buf.clear();
            ex.features.write_canonical(&mut buf);
            buf.extend_from_slice(&ex.label.to_le_bytes());
            hasher.update(&buf);
        }
        hasher.finalize().into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn dense(xs: &[f64], label: u32) -> Example {
        Example { features: FeatureVector::Dense(xs.to_vec()), label }
    }

    #[test]
    fn rejects_label_out_of_range() {
        let err = Dataset::new(
            vec![dense(&[0.0], 0), dense(&[1.0], 2)],
            LabelSpace::new(2).unwrap(),
            FeatureSpec::Dense { dim: 1 },
            String::from("t"),
            0,
        )
        .unwrap_err();
        assert_eq!(err, Error::LabelOutOfRange { index: 1, label: 2, num_classes: 2 });
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let err = Dataset::new(
            vec![dense(&[0.0, 1.0], 0)],
            LabelSpace::new(2).unwrap(),
            FeatureSpec::Dense { dim: 3 },
            String::from("t"),
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::FeatureMismatch(_)));
    }

    #[test]
    fn sparse_entries_must_be_sorted_positive() {
        let spec = FeatureSpec::Sparse { vocab: 10 };
        assert!(FeatureVector::Sparse(vec![(1, 2), (3, 1)]).conforms(&spec).is_ok());
        assert!(FeatureVector::Sparse(vec![(3, 1), (1, 2)]).conforms(&spec).is_err());
        assert!(FeatureVector::Sparse(vec![(1, 0)]).conforms(&spec).is_err());
        assert!(FeatureVector::Sparse(vec![(10, 1)]).conforms(&spec).is_err());
    }

    #[test]
    fn digest_tracks_order() {
        let ls = LabelSpace::new(2).unwrap();
        let fs = FeatureSpec::Dense { dim: 1 };
        let a = Dataset::new(
            vec![dense(&[0.0], 0), dense(&[1.0], 1)],
            ls,
            fs,
            String::from("t"),
            0,
        )
        .unwrap();
        let b = Dataset::new(
            vec![dense(&[1.0], 1), dense(&[0.0], 0)],
            ls,
            fs,
            String::from("t"),
            0,
        )
        .unwrap();
        assert_ne!(a.content_digest(), b.content_digest());
        assert_eq!(a.content_digest(), a.clone().content_digest());
    }
}
