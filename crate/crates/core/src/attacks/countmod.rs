use crate::dataset::{DeletionRequest, Elem, Multiset};
use crate::error::{Error, Result};
use crate::mechanism::{Curator, Mechanism};
use crate::queries::{reconstruct, CountingQueryFamily, Subset};

use super::{AttackOutcome, Recovered};

/// `T = D ∪ S` where `S` holds `copies` copies of every `i ∈ [n]`.
pub fn countmod_dataset(n: u32, d: &Subset, copies: u64) -> Multiset<Elem> {
    let mut t: Multiset<Elem> = d.iter().map(|&i| Elem::Item(i)).collect();
    for i in 1..=n {
        t.insert(Elem::Item(i), copies);
    }
    t
}

/// Answers the counting query with support `support` through a CountMod
/// release: delete two copies of each supported id, read the release, then
/// delete one more copy of each to restore every count mod 3. Returns the
/// release read and the copies deleted (`3·|support|`).
pub fn countmod_query_attack<M: Mechanism<Elem = Elem>>(
    cur: &mut Curator<M>,
    support: &[u32],
) -> Result<(f64, u64)> {
    if support.is_empty() {
        let a = cur.latest().scalar().ok_or(Error::InvalidParams("release is not a scalar".into()))?;
        return Ok((a, 0));
    }
    let step = |m| -> Result<Vec<DeletionRequest<Elem>>> {
        support.iter().map(|&i| DeletionRequest::new(Elem::Item(i), m)).collect()
    };
    let a = cur
        .delete_batch(step(2)?)?
        .scalar()
        .ok_or(Error::InvalidParams("release is not a scalar".into()))?;
    cur.delete_batch(step(1)?)?;
    Ok((a, 3 * support.len() as u64))
}

/// Asks all `n` Hadamard queries through [`countmod_query_attack`] and
/// decodes the answers.
pub fn countmod_reconstruct<M: Mechanism<Elem = Elem>>(
    cur: &mut Curator<M>,
    family: &CountingQueryFamily,
) -> Result<AttackOutcome> {
    let mut answers = Vec::with_capacity(family.n() as usize);
    let mut used = 0;
    for j in 1..=family.n() {
        let (a, d) = countmod_query_attack(cur, &family.support(j))?;
        answers.push(a);
        used += d;
    }
    let dhat = reconstruct(&answers, family.n())?;
    Ok(AttackOutcome::new(Recovered::Subset(dhat.into_iter().collect()), used))
}
