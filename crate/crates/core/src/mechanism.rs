//! The stateful-mechanism interface and a driver that records transcripts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{DeletionRequest, Element, Multiset};
use crate::error::{Error, Result};
use crate::release::{MechanismTranscript, Release};

/// A curator algorithm: one initial release, then one release per deletion
/// round. Implementations are single-owner state machines.
pub trait Mechanism {
    type Elem: Element + Serialize;

    fn id(&self) -> MechanismId;

    fn init(&mut self, data: Multiset<Self::Elem>, seed: u64) -> Result<Release>;

    /// Serves one deletion round. The whole batch is removed before the
    /// release is recomputed; a failing batch leaves the state untouched.
    fn delete_batch(&mut self, batch: &[DeletionRequest<Self::Elem>]) -> Result<Release>;

    fn delete(&mut self, req: DeletionRequest<Self::Elem>) -> Result<Release> {
        self.delete_batch(std::slice::from_ref(&req))
    }

    /// The public update rule, if the transcript is a deterministic function
    /// of the initial release and the deleted values. Built from public
    /// parameters only; never from the data.
    fn update_rule(&self, _initial: &Release) -> Option<Box<dyn UpdateRule<Self::Elem>>> {
        None
    }
}

/// Recomputes the next release from the previous public state and the
/// deleted values alone.
pub trait UpdateRule<T>: Send {
    fn advance(&mut self, batch: &[DeletionRequest<T>]) -> Result<Release>;
}

/// String ids used by configs and the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismId {
    DpSum,
    DpMedian,
    BqRetrainer,
    Xor1,
    Xor2,
    Sq,
    ExactMedian,
    NaiveMedian,
    Kmeans,
    Countmod,
}

impl MechanismId {
    pub const ALL: [MechanismId; 10] = [
        MechanismId::DpSum,
        MechanismId::DpMedian,
        MechanismId::BqRetrainer,
        MechanismId::Xor1,
        MechanismId::Xor2,
        MechanismId::Sq,
        MechanismId::ExactMedian,
        MechanismId::NaiveMedian,
        MechanismId::Kmeans,
        MechanismId::Countmod,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MechanismId::DpSum => "dp_sum",
            MechanismId::DpMedian => "dp_median",
            MechanismId::BqRetrainer => "bq_retrainer",
            MechanismId::Xor1 => "xor1",
            MechanismId::Xor2 => "xor2",
            MechanismId::Sq => "sq",
            MechanismId::ExactMedian => "exact_median",
            MechanismId::NaiveMedian => "naive_median",
            MechanismId::Kmeans => "kmeans",
            MechanismId::Countmod => "countmod",
        }
    }

    /// Whether a registered public update rule exists for this mechanism.
    pub fn is_stateless(self) -> bool {
        matches!(
            self,
            MechanismId::DpSum
                | MechanismId::DpMedian
                | MechanismId::Sq
                | MechanismId::Xor1
                | MechanismId::NaiveMedian
        )
    }
}

impl fmt::Display for MechanismId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MechanismId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MechanismId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown mechanism `{s}`")))
    }
}

/// Owns a mechanism and records everything it releases.
pub struct Curator<M: Mechanism> {
    mech: M,
    transcript: MechanismTranscript<M::Elem>,
    copies_deleted: u64,
}

impl<M: Mechanism> Curator<M> {
    pub fn start(mut mech: M, data: Multiset<M::Elem>, seed: u64) -> Result<Self> {
        let initial = mech.init(data, seed)?;
        Ok(Self {
            mech,
            transcript: MechanismTranscript::new(initial),
            copies_deleted: 0,
        })
    }

    pub fn delete(&mut self, req: DeletionRequest<M::Elem>) -> Result<&Release> {
        self.delete_batch(vec![req])
    }

    pub fn delete_batch(&mut self, batch: Vec<DeletionRequest<M::Elem>>) -> Result<&Release> {
        let release = self.mech.delete_batch(&batch)?;
        self.copies_deleted += batch.iter().map(|r| r.multiplicity).sum::<u64>();
        self.transcript.push(batch, release);
        Ok(self.transcript.latest())
    }

    pub fn initial(&self) -> &Release {
        &self.transcript.initial
    }

    pub fn latest(&self) -> &Release {
        self.transcript.latest()
    }

    pub fn transcript(&self) -> &MechanismTranscript<M::Elem> {
        &self.transcript
    }

    /// Total copies deleted so far, counting multiplicity.
    pub fn deletions_used(&self) -> u64 {
        self.copies_deleted
    }

    pub fn mechanism(&self) -> &M {
        &self.mech
    }

    pub fn into_transcript(self) -> MechanismTranscript<M::Elem> {
        self.transcript
    }
}
