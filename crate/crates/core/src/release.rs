//! Release payloads and the transcripts that record them.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::DeletionRequest;
use crate::dp::RangeCountStructure;

/// Public state carried by the initial release of a stateless mechanism.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PublicState {
    /// Noisy range-count tree plus the (public) dataset size.
    RangeTree { tree: RangeCountStructure, size: u64 },
    /// Noisy per-predicate sums.
    Sums(Vec<f64>),
}

/// What a mechanism outputs after `init` or a deletion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Release {
    Scalar(f64),
    Vector(Vec<f64>),
    Centers { c1: f64, c2: f64 },
    Block { index: u32, values: Vec<f64> },
    Bits(u64),
    Structure { value: f64, state: PublicState },
}

impl Release {
    /// The headline scalar, where there is one.
    pub fn scalar(&self) -> Option<f64> {
        match self {
            Release::Scalar(v) | Release::Structure { value: v, .. } => Some(*v),
            _ => None,
        }
    }

    pub fn bits(&self) -> Option<u64> {
        match self {
            Release::Bits(b) => Some(*b),
            _ => None,
        }
    }

    pub fn centers(&self) -> Option<(f64, f64)> {
        match self {
            Release::Centers { c1, c2 } => Some((*c1, *c2)),
            _ => None,
        }
    }

    pub fn block(&self) -> Option<(u32, &[f64])> {
        match self {
            Release::Block { index, values } => Some((*index, values)),
            _ => None,
        }
    }

    pub fn vector(&self) -> Option<&[f64]> {
        match self {
            Release::Vector(v) => Some(v),
            Release::Structure {
                state: PublicState::Sums(v),
                ..
            } => Some(v),
            _ => None,
        }
    }
}

/// One deletion round: the batch served and the release it produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Step<T> {
    #[serde(with = "batch_repr")]
    pub delete: Vec<DeletionRequest<T>>,
    pub release: Release,
}

/// `(z_0, (y_1, z_1), …, (y_r, z_r))` in request order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismTranscript<T> {
    pub initial: Release,
    pub steps: Vec<Step<T>>,
}

impl<T: Serialize> MechanismTranscript<T> {
    pub fn new(initial: Release) -> Self {
        Self {
            initial,
            steps: Vec::new(),
        }
    }

    pub fn push(&mut self, delete: Vec<DeletionRequest<T>>, release: Release) {
        self.steps.push(Step { delete, release });
    }

    pub fn rounds(&self) -> usize {
        self.steps.len()
    }

    /// `z_0, z_1, …` in order.
    pub fn releases(&self) -> impl Iterator<Item = &Release> + '_ {
        std::iter::once(&self.initial).chain(self.steps.iter().map(|s| &s.release))
    }

    pub fn latest(&self) -> &Release {
        self.steps.last().map(|s| &s.release).unwrap_or(&self.initial)
    }

    /// Hex SHA-256 of the canonical JSON encoding of all releases.
    pub fn release_digest(&self) -> String {
        let releases: Vec<&Release> = self.releases().collect();
        digest_json(&releases)
    }
}

/// Hex SHA-256 of a value's JSON encoding.
pub fn digest_json<S: Serialize + ?Sized>(value: &S) -> String {
    let bytes = serde_json::to_vec(value).expect("release payloads always serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// Single-request rounds serialize as one object, batches as an array.
mod batch_repr {
    use super::DeletionRequest;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr<T> {
        One(DeletionRequest<T>),
        Many(Vec<DeletionRequest<T>>),
    }

    pub fn serialize<T: Serialize, S: Serializer>(
        batch: &[DeletionRequest<T>],
        s: S,
    ) -> Result<S::Ok, S::Error> {
        if let [one] = batch {
            one.serialize(s)
        } else {
            batch.serialize(s)
        }
    }

    pub fn deserialize<'de, T: Deserialize<'de>, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Vec<DeletionRequest<T>>, D::Error> {
        Ok(match Repr::deserialize(d)? {
            Repr::One(r) => vec![r],
            Repr::Many(v) => v,
        })
    }
}
