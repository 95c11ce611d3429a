use std::sync::Arc;

use serde::Serialize;

use crate::dataset::{DeletionRequest, Element, Multiset};
use crate::dp::{laplace, snap, PrivacyParams};
use crate::error::{Error, Result};
use crate::mechanism::{Mechanism, MechanismId, UpdateRule};
use crate::release::{PublicState, Release};
use crate::rng::rng_from;

use super::live;

/// A statistic `c: X → [0, 1]`.
pub type Predicate<T> = Arc<dyn Fn(&T) -> f64 + Send + Sync>;

/// How the maintained sums become a release.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PostProcess {
    /// The sums themselves.
    Identity,
    /// `sums[num] / sums[den]`, e.g. a mean from a (sum, count) pair.
    Ratio { num: usize, den: usize },
}

fn evaluate<T>(preds: &[Predicate<T>], x: &T) -> Result<Vec<f64>> {
    preds
        .iter()
        .map(|c| {
            let v = c(x);
            if (0.0..=1.0).contains(&v) {
                Ok(snap(v))
            } else {
                Err(Error::DomainOverflow(v))
            }
        })
        .collect()
}

fn subtract<T>(preds: &[Predicate<T>], sums: &mut [f64], batch: &[DeletionRequest<T>]) -> Result<()> {
    let mut next = sums.to_vec();
    for r in batch {
        for (s, v) in next.iter_mut().zip(evaluate(preds, &r.element)?) {
            *s -= v * r.multiplicity as f64;
        }
    }
    sums.copy_from_slice(&next);
    Ok(())
}

fn finish(post: PostProcess, sums: &[f64]) -> Release {
    match post {
        PostProcess::Identity => Release::Vector(sums.to_vec()),
        PostProcess::Ratio { num, den } => Release::Scalar(sums[num] / sums[den]),
    }
}

/// Statistical-query mechanism: noisy sums `Σ_x c(x) + Lap(|C|/ε)` for each
/// predicate, maintained by exact subtraction, then post-processed.
pub struct SqMechanism<T: Ord> {
    preds: Vec<Predicate<T>>,
    privacy: PrivacyParams,
    post: PostProcess,
    state: Option<(Multiset<T>, Vec<f64>)>,
}

impl<T: Element> SqMechanism<T> {
    pub fn new(preds: Vec<Predicate<T>>, epsilon: f64, post: PostProcess) -> Result<Self> {
        if preds.is_empty() {
            return Err(Error::InvalidParams("at least one predicate is required".into()));
        }
        if let PostProcess::Ratio { num, den } = post {
            if num >= preds.len() || den >= preds.len() {
                return Err(Error::InvalidParams("ratio indices out of range".into()));
            }
        }
        Ok(Self {
            preds,
            privacy: PrivacyParams::pure(epsilon)?,
            post,
            state: None,
        })
    }

    /// Exact per-predicate sums over `data`, on the same grid as the noisy sums.
    pub fn exact_sums(&self, data: &Multiset<T>) -> Result<Vec<f64>> {
        let mut sums = vec![0.0; self.preds.len()];
        for (x, c) in data.iter() {
            for (s, v) in sums.iter_mut().zip(evaluate(&self.preds, x)?) {
                *s += v * c as f64;
            }
        }
        Ok(sums)
    }

    /// The noisy sums currently maintained.
    pub fn sums(&self) -> Option<&[f64]> {
        self.state.as_ref().map(|(_, s)| s.as_slice())
    }
}

impl<T: Element + Serialize> Mechanism for SqMechanism<T> {
    type Elem = T;

    fn id(&self) -> MechanismId {
        MechanismId::Sq
    }

    fn init(&mut self, data: Multiset<T>, seed: u64) -> Result<Release> {
        let mut sums = self.exact_sums(&data)?;
        let scale = self.preds.len() as f64 / self.privacy.epsilon;
        let mut rng = rng_from(seed);
        for s in sums.iter_mut() {
            *s += snap(laplace(scale, &mut rng)?);
        }
        let release = match self.post {
            PostProcess::Identity => Release::Vector(sums.clone()),
            post => Release::Structure {
                value: finish(post, &sums).scalar().expect("ratio is scalar"),
                state: PublicState::Sums(sums.clone()),
            },
        };
        self.state = Some((data, sums));
        Ok(release)
    }

    fn delete_batch(&mut self, batch: &[DeletionRequest<T>]) -> Result<Release> {
        let (data, sums) = live(&mut self.state)?;
        let mut next = data.clone();
        next.remove_all(batch)?;
        subtract(&self.preds, sums, batch)?;
        *data = next;
        Ok(finish(self.post, sums))
    }

    fn update_rule(&self, initial: &Release) -> Option<Box<dyn UpdateRule<T>>> {
        Some(Box::new(SqRule {
            preds: self.preds.clone(),
            post: self.post,
            sums: initial.vector()?.to_vec(),
        }))
    }
}

/// Public update rule of [`SqMechanism`]: the predicates and the initial sums.
pub struct SqRule<T> {
    preds: Vec<Predicate<T>>,
    post: PostProcess,
    sums: Vec<f64>,
}

impl<T> UpdateRule<T> for SqRule<T> {
    fn advance(&mut self, batch: &[DeletionRequest<T>]) -> Result<Release> {
        subtract(&self.preds, &mut self.sums, batch)?;
        Ok(finish(self.post, &self.sums))
    }
}
