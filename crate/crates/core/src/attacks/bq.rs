use crate::dataset::{DeletionRequest, Elem, Multiset};
use crate::error::{Error, Result};
use crate::mechanism::{Curator, Mechanism};
use crate::queries::{reconstruct, CountingQueryFamily, Subset};
use crate::release::Release;

use super::{AttackOutcome, Recovered};

/// `T = D ∪ (3k·n/t copies of ⋆)`.
pub fn bq_dataset(family: &CountingQueryFamily, k: u64, d: &Subset) -> Multiset<Elem> {
    Multiset::from_ids(d.iter().copied(), 3 * k * family.blocks() as u64)
}

fn block(r: &Release) -> Result<(u32, Vec<f64>)> {
    r.block()
        .map(|(i, v)| (i, v.to_vec()))
        .ok_or_else(|| Error::InvalidParams("release is not a query block".into()))
}

/// Walks the block index down by deleting `3k` stars per round, collects
/// every block of answers, and decodes `D̂`.
///
/// Blocks never released are filled with zeros. Uses `3k·(n/t − 1)` deletions.
pub fn bq_attack<M: Mechanism<Elem = Elem>>(
    cur: &mut Curator<M>,
    family: &CountingQueryFamily,
    k: u64,
) -> Result<AttackOutcome> {
    let blocks = family.blocks();
    let mut answers: Vec<Option<Vec<f64>>> = vec![None; blocks as usize];
    let mut store = |r: &Release| -> Result<()> {
        let (i, v) = block(r)?;
        if i == 0 || i > blocks || v.len() != family.t() as usize {
            return Err(Error::InvalidParams(format!("malformed block {i}")));
        }
        answers[i as usize - 1] = Some(v);
        Ok(())
    };
    store(cur.initial())?;
    let mut used = 0;
    for _ in 1..blocks {
        let r = cur.delete(DeletionRequest::new(Elem::Star, 3 * k)?)?;
        store(r)?;
        used += 3 * k;
    }
    let flat: Vec<f64> = answers
        .into_iter()
        .flat_map(|b| b.unwrap_or_else(|| vec![0.0; family.t() as usize]))
        .collect();
    let dhat = reconstruct(&flat, family.n())?;
    Ok(AttackOutcome::new(Recovered::Subset(dhat.into_iter().collect()), used))
}
