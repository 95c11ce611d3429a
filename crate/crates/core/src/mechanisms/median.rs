use crate::dataset::{exact_median, DeletionRequest, Multiset, Point};
use crate::dp::{bin_value, DeletionLedger, PrivacyParams, RangeCountStructure};
use crate::error::{Error, Result};
use crate::mechanism::{Mechanism, MechanismId, UpdateRule};
use crate::release::{PublicState, Release};
use crate::rng::rng_from;

use super::live;

/// Perfect retraining: the exact median of the remaining data, every round.
#[derive(Default)]
pub struct ExactMedianRetrainer {
    data: Option<Multiset<Point>>,
}

impl ExactMedianRetrainer {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Mechanism for ExactMedianRetrainer {
    type Elem = Point;

    fn id(&self) -> MechanismId {
        MechanismId::ExactMedian
    }

    fn init(&mut self, data: Multiset<Point>, _seed: u64) -> Result<Release> {
        let z = exact_median(&data)?.get();
        self.data = Some(data);
        Ok(Release::Scalar(z))
    }

    fn delete_batch(&mut self, batch: &[DeletionRequest<Point>]) -> Result<Release> {
        let data = live(&mut self.data)?;
        let mut next = data.clone();
        next.remove_all(batch)?;
        let z = exact_median(&next)?.get();
        *data = next;
        Ok(Release::Scalar(z))
    }
}

/// Releases the initial exact median and repeats it forever. After `ℓ`
/// deletions its rank error is at most `ℓ`.
#[derive(Default)]
pub struct NaiveMedian {
    state: Option<(Multiset<Point>, f64)>,
}

impl NaiveMedian {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Mechanism for NaiveMedian {
    type Elem = Point;

    fn id(&self) -> MechanismId {
        MechanismId::NaiveMedian
    }

    fn init(&mut self, data: Multiset<Point>, _seed: u64) -> Result<Release> {
        let z = exact_median(&data)?.get();
        self.state = Some((data, z));
        Ok(Release::Scalar(z))
    }

    fn delete_batch(&mut self, batch: &[DeletionRequest<Point>]) -> Result<Release> {
        let (data, z) = live(&mut self.state)?;
        data.remove_all(batch)?;
        Ok(Release::Scalar(*z))
    }

    fn update_rule(&self, initial: &Release) -> Option<Box<dyn UpdateRule<Point>>> {
        Some(Box::new(NaiveMedianRule { z: initial.scalar()? }))
    }
}

pub struct NaiveMedianRule {
    z: f64,
}

impl UpdateRule<Point> for NaiveMedianRule {
    fn advance(&mut self, _batch: &[DeletionRequest<Point>]) -> Result<Release> {
        Ok(Release::Scalar(self.z))
    }
}

/// Private median from a noisy range-count tree. Each release descends the
/// tree towards the first bin whose corrected prefix count reaches half the
/// remaining size, subtracting the exact deletion ledger at every node.
///
/// The initial release carries the tree and the dataset size; later releases
/// are scalars.
pub struct DpMedian {
    bits: u32,
    privacy: PrivacyParams,
    state: Option<DpMedianRule>,
    data: Multiset<Point>,
    publish: bool,
}

impl DpMedian {
    pub fn new(bits: u32, epsilon: f64) -> Result<Self> {
        DeletionLedger::new(bits)?;
        Ok(Self {
            bits,
            privacy: PrivacyParams::pure(epsilon)?,
            state: None,
            data: Multiset::new(),
            publish: true,
        })
    }

    /// Keeps the tree private: `z_0` becomes the bare median estimate and no
    /// public update rule exists.
    pub fn with_hidden_structure(mut self) -> Self {
        self.publish = false;
        self
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// The structure built at init, if any.
    pub fn structure(&self) -> Option<&RangeCountStructure> {
        self.state.as_ref().map(|s| &s.tree)
    }
}

impl Mechanism for DpMedian {
    type Elem = Point;

    fn id(&self) -> MechanismId {
        MechanismId::DpMedian
    }

    fn init(&mut self, data: Multiset<Point>, seed: u64) -> Result<Release> {
        let tree = RangeCountStructure::build(&data, self.bits, self.privacy.epsilon, &mut rng_from(seed))?;
        let rule = DpMedianRule::new(tree.clone(), data.total_size());
        let value = rule.current();
        self.state = Some(rule);
        self.data = data;
        if !self.publish {
            return Ok(Release::Scalar(value));
        }
        Ok(Release::Structure {
            value,
            state: PublicState::RangeTree {
                tree,
                size: self.data.total_size(),
            },
        })
    }

    fn delete_batch(&mut self, batch: &[DeletionRequest<Point>]) -> Result<Release> {
        let rule = live(&mut self.state)?;
        let mut next = self.data.clone();
        next.remove_all(batch)?;
        let release = rule.advance(batch)?;
        self.data = next;
        Ok(release)
    }

    fn update_rule(&self, initial: &Release) -> Option<Box<dyn UpdateRule<Point>>> {
        match initial {
            Release::Structure {
                state: PublicState::RangeTree { tree, size },
                ..
            } => Some(Box::new(DpMedianRule::new(tree.clone(), *size))),
            _ => None,
        }
    }
}

/// Public update rule of [`DpMedian`]: the tree, the deletion ledger, and the
/// remaining size.
pub struct DpMedianRule {
    tree: RangeCountStructure,
    ledger: DeletionLedger,
    remaining: u64,
}

impl DpMedianRule {
    pub fn new(tree: RangeCountStructure, size: u64) -> Self {
        let ledger = DeletionLedger::for_structure(&tree);
        Self {
            tree,
            ledger,
            remaining: size,
        }
    }

    fn current(&self) -> f64 {
        let leaf = self.tree.descend(&self.ledger, self.remaining as f64 / 2.0);
        bin_value(self.tree.bits(), leaf)
    }
}

impl UpdateRule<Point> for DpMedianRule {
    fn advance(&mut self, batch: &[DeletionRequest<Point>]) -> Result<Release> {
        let copies: u64 = batch.iter().map(|r| r.multiplicity).sum();
        if copies > self.remaining {
            return Err(Error::EmptyDataset);
        }
        let mut ledger = self.ledger.clone();
        for r in batch {
            ledger.record(r.element.get(), r.multiplicity)?;
        }
        self.ledger = ledger;
        self.remaining -= copies;
        Ok(Release::Scalar(self.current()))
    }
}
