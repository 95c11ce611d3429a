use crate::dataset::{DeletionRequest, Point};
use crate::error::{Error, Result};
use crate::mechanism::{Curator, Mechanism};
use crate::release::MechanismTranscript;

use super::{AttackOutcome, Recovered};

fn scalar_at<T: serde::Serialize>(t: &MechanismTranscript<T>, i: usize) -> Result<f64> {
    t.releases()
        .nth(i)
        .and_then(|r| r.scalar())
        .ok_or_else(|| Error::InvalidParams(format!("release {i} is not a scalar")))
}

/// `z_{ℓ−1} − z_ℓ` for round `step` (1-based): the deleted value when the
/// mechanism releases exact sums.
pub fn differencing_attack<T: serde::Serialize>(t: &MechanismTranscript<T>, step: usize) -> Result<f64> {
    if t.rounds() == 0 {
        return Err(Error::NoDeletions);
    }
    if step == 0 || step > t.rounds() {
        return Err(Error::InvalidParams(format!("step {step} outside 1..={}", t.rounds())));
    }
    Ok(scalar_at(t, step - 1)? - scalar_at(t, step)?)
}

/// Differences for every round, in order.
pub fn differencing_all<T: serde::Serialize>(t: &MechanismTranscript<T>) -> Result<Vec<f64>> {
    if t.rounds() == 0 {
        return Err(Error::NoDeletions);
    }
    (1..=t.rounds()).map(|s| differencing_attack(t, s)).collect()
}

/// `z_0 ⊕ z_ℓ` for every round. Against the deleted-value XOR curator this
/// is each deleted value; against the undeleted-value variant it is the
/// sampled remaining point.
pub fn xor_differencing_attack(t: &MechanismTranscript<u64>) -> Result<Vec<u64>> {
    if t.rounds() == 0 {
        return Err(Error::NoDeletions);
    }
    let z0 = t
        .initial
        .bits()
        .ok_or_else(|| Error::InvalidParams("initial release is not a bit string".into()))?;
    t.steps
        .iter()
        .map(|s| {
            s.release
                .bits()
                .map(|z| z0 ^ z)
                .ok_or_else(|| Error::InvalidParams("release is not a bit string".into()))
        })
        .collect()
}

/// Deletes one controlled point and reports the next release.
pub fn median_exposure_attack<M: Mechanism<Elem = Point>>(
    cur: &mut Curator<M>,
    controlled: Point,
) -> Result<AttackOutcome> {
    let z = cur
        .delete(DeletionRequest::one(controlled))?
        .scalar()
        .ok_or_else(|| Error::InvalidParams("release is not a scalar".into()))?;
    Ok(AttackOutcome::new(Recovered::Scalar(z), 1))
}
