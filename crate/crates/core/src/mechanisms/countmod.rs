use crate::dataset::{DeletionRequest, Elem, Multiset};
use crate::error::Result;
use crate::mechanism::{Mechanism, MechanismId};
use crate::release::Release;

use super::live;

/// Number of ids `i` with `count_T(i) mod 3 = 2`. Stars are ignored.
pub fn countmod(t: &Multiset<Elem>) -> u64 {
    t.items().filter(|&(_, c)| c % 3 == 2).count() as u64
}

/// Perfect retraining of [`countmod`]: every release is recomputed exactly.
#[derive(Default)]
pub struct CountModRetrainer {
    data: Option<Multiset<Elem>>,
}

impl CountModRetrainer {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Mechanism for CountModRetrainer {
    type Elem = Elem;

    fn id(&self) -> MechanismId {
        MechanismId::Countmod
    }

    fn init(&mut self, data: Multiset<Elem>, _seed: u64) -> Result<Release> {
        let z = countmod(&data) as f64;
        self.data = Some(data);
        Ok(Release::Scalar(z))
    }

    fn delete_batch(&mut self, batch: &[DeletionRequest<Elem>]) -> Result<Release> {
        let data = live(&mut self.data)?;
        data.remove_all(batch)?;
        Ok(Release::Scalar(countmod(data) as f64))
    }
}
