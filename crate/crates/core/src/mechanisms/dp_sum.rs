use crate::dataset::{DeletionRequest, Multiset, Point};
use crate::dp::{laplace, snap, PrivacyParams};
use crate::error::{Error, Result};
use crate::mechanism::{Mechanism, MechanismId, UpdateRule};
use crate::release::Release;
use crate::rng::rng_from;

use super::live;

fn grid_value(x: &Point) -> Result<f64> {
    let v = x.get();
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::DomainOverflow(v));
    }
    Ok(snap(v))
}

fn batch_total(batch: &[DeletionRequest<Point>]) -> Result<f64> {
    batch
        .iter()
        .map(|r| grid_value(&r.element).map(|v| v * r.multiplicity as f64))
        .sum()
}

/// Private sum over `[0, 1]`: `z_0 = Σx + Lap(1/ε)`, then each deletion of
/// `x` releases the previous value minus `x`.
///
/// Inputs are read on the `2^-32` grid, so the noise term stays bit-exact
/// across the whole transcript.
pub struct DpSum {
    privacy: PrivacyParams,
    state: Option<(Multiset<Point>, f64)>,
}

impl DpSum {
    pub fn new(epsilon: f64) -> Result<Self> {
        Ok(Self {
            privacy: PrivacyParams::pure(epsilon)?,
            state: None,
        })
    }

    /// Exact sum of the remaining grid values.
    pub fn exact_sum(data: &Multiset<Point>) -> Result<f64> {
        data.iter().map(|(x, c)| grid_value(x).map(|v| v * c as f64)).sum()
    }
}

impl Mechanism for DpSum {
    type Elem = Point;

    fn id(&self) -> MechanismId {
        MechanismId::DpSum
    }

    fn init(&mut self, data: Multiset<Point>, seed: u64) -> Result<Release> {
        let sum = Self::exact_sum(&data)?;
        let noise = snap(laplace(1.0 / self.privacy.epsilon, &mut rng_from(seed))?);
        let z = sum + noise;
        self.state = Some((data, z));
        Ok(Release::Scalar(z))
    }

    fn delete_batch(&mut self, batch: &[DeletionRequest<Point>]) -> Result<Release> {
        let (data, z) = live(&mut self.state)?;
        let delta = batch_total(batch)?;
        data.remove_all(batch)?;
        *z -= delta;
        Ok(Release::Scalar(*z))
    }

    fn update_rule(&self, initial: &Release) -> Option<Box<dyn UpdateRule<Point>>> {
        Some(Box::new(DpSumRule { z: initial.scalar()? }))
    }
}

/// Public update rule: subtract each deleted value.
pub struct DpSumRule {
    z: f64,
}

impl UpdateRule<Point> for DpSumRule {
    fn advance(&mut self, batch: &[DeletionRequest<Point>]) -> Result<Release> {
        self.z -= batch_total(batch)?;
        Ok(Release::Scalar(self.z))
    }
}
