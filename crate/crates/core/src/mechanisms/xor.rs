use rand::Rng;

use crate::dataset::{DeletionRequest, Multiset};
use crate::error::{Error, Result};
use crate::mechanism::{Mechanism, MechanismId, UpdateRule};
use crate::release::Release;
use crate::rng::{rng_from, Rng as ChaCha};

use super::live;

fn mask(d: u32) -> u64 {
    if d == 64 {
        u64::MAX
    } else {
        (1u64 << d) - 1
    }
}

fn check_width(d: u32) -> Result<()> {
    if d == 0 || d > 64 {
        return Err(Error::InvalidParams(format!("bit width must lie in 1..=64, got {d}")));
    }
    Ok(())
}

fn check_values(data: &Multiset<u64>, d: u32) -> Result<()> {
    match data.iter().find(|(x, _)| **x & !mask(d) != 0) {
        Some((x, _)) => Err(Error::InvalidElement(format!("{x:#b} has more than {d} bits"))),
        None => Ok(()),
    }
}

/// XOR of every deleted copy in a batch.
fn batch_xor(batch: &[DeletionRequest<u64>]) -> u64 {
    batch
        .iter()
        .filter(|r| r.multiplicity % 2 == 1)
        .fold(0, |acc, r| acc ^ r.element)
}

/// Releases a uniform mask `z`, then `z ⊕ x` for each deleted `x`.
pub struct XorDeleted {
    d: u32,
    state: Option<(Multiset<u64>, u64)>,
}

impl XorDeleted {
    pub fn new(d: u32) -> Result<Self> {
        check_width(d)?;
        Ok(Self { d, state: None })
    }
}

impl Mechanism for XorDeleted {
    type Elem = u64;

    fn id(&self) -> MechanismId {
        MechanismId::Xor1
    }

    fn init(&mut self, data: Multiset<u64>, seed: u64) -> Result<Release> {
        check_values(&data, self.d)?;
        let z = rng_from(seed).random::<u64>() & mask(self.d);
        self.state = Some((data, z));
        Ok(Release::Bits(z))
    }

    fn delete_batch(&mut self, batch: &[DeletionRequest<u64>]) -> Result<Release> {
        let (data, z) = live(&mut self.state)?;
        data.remove_all(batch)?;
        Ok(Release::Bits(*z ^ batch_xor(batch)))
    }

    fn update_rule(&self, initial: &Release) -> Option<Box<dyn UpdateRule<u64>>> {
        Some(Box::new(XorRule { z: initial.bits()? }))
    }
}

/// Public update rule of [`XorDeleted`].
pub struct XorRule {
    z: u64,
}

impl UpdateRule<u64> for XorRule {
    fn advance(&mut self, batch: &[DeletionRequest<u64>]) -> Result<Release> {
        Ok(Release::Bits(self.z ^ batch_xor(batch)))
    }
}

/// Releases a uniform mask `z`, then `z ⊕ y` for a uniformly random
/// remaining point `y` after each deletion.
pub struct XorUndeleted {
    d: u32,
    state: Option<(Multiset<u64>, u64)>,
    rng: ChaCha,
}

impl XorUndeleted {
    pub fn new(d: u32) -> Result<Self> {
        check_width(d)?;
        Ok(Self {
            d,
            state: None,
            rng: rng_from(0),
        })
    }
}

impl Mechanism for XorUndeleted {
    type Elem = u64;

    fn id(&self) -> MechanismId {
        MechanismId::Xor2
    }

    fn init(&mut self, data: Multiset<u64>, seed: u64) -> Result<Release> {
        check_values(&data, self.d)?;
        self.rng = rng_from(seed);
        let z = self.rng.random::<u64>() & mask(self.d);
        self.state = Some((data, z));
        Ok(Release::Bits(z))
    }

    fn delete_batch(&mut self, batch: &[DeletionRequest<u64>]) -> Result<Release> {
        let (data, z) = live(&mut self.state)?;
        let mut next = data.clone();
        next.remove_all(batch)?;
        if next.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let rank = self.rng.random_range(1..=next.total_size());
        let y = *next.nth_smallest(rank).expect("rank within size");
        *data = next;
        Ok(Release::Bits(*z ^ y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(v: &[u64]) -> Multiset<u64> {
        v.iter().copied().collect()
    }

    fn zero_mask_seed(d: u32) -> u64 {
        (0..).find(|&s| rng_from(s).random::<u64>() & mask(d) == 0).unwrap()
    }

    #[test]
    fn identity_mask_reveals_deleted_value() {
        let seed = zero_mask_seed(4);
        let mut m = XorDeleted::new(4).unwrap();
        assert_eq!(m.init(data(&[0b1010, 0b0110]), seed).unwrap(), Release::Bits(0));
        assert_eq!(m.delete(DeletionRequest::one(0b1010)).unwrap(), Release::Bits(0b1010));
    }

    #[test]
    fn differencing_recovers_any_value() {
        for seed in 0..50 {
            let mut m = XorDeleted::new(8).unwrap();
            let z0 = m.init(data(&[3, 77, 200, 255]), seed).unwrap().bits().unwrap();
            let z1 = m.delete(DeletionRequest::one(200)).unwrap().bits().unwrap();
            assert_eq!(z0 ^ z1, 200);
        }
    }

    #[test]
    fn xor_chains_reveal_pairwise_xors() {
        let mut m = XorDeleted::new(16).unwrap();
        m.init(data(&[11, 500, 9000]), 4).unwrap();
        let a = m.delete(DeletionRequest::one(11)).unwrap().bits().unwrap();
        let b = m.delete(DeletionRequest::one(9000)).unwrap().bits().unwrap();
        assert_eq!(a ^ b, 11 ^ 9000);
    }

    #[test]
    fn undeleted_variant_releases_a_remaining_point() {
        for seed in 0..50 {
            let mut m = XorUndeleted::new(8).unwrap();
            let z0 = m.init(data(&[1, 2, 3]), seed).unwrap().bits().unwrap();
            let y = z0 ^ m.delete(DeletionRequest::one(2)).unwrap().bits().unwrap();
            assert!(y == 1 || y == 3);
        }
        let mut m = XorUndeleted::new(8).unwrap();
        m.init(data(&[1]), 0).unwrap();
        assert_eq!(m.delete(DeletionRequest::one(1)), Err(Error::EmptyDataset));
    }

    #[test]
    fn rejects_wide_values() {
        assert!(XorDeleted::new(4).unwrap().init(data(&[16]), 0).is_err());
        assert!(XorDeleted::new(0).is_err());
        assert!(XorDeleted::new(64).unwrap().init(data(&[u64::MAX]), 0).is_ok());
    }
}
