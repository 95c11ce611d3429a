use serde::{Deserialize, Serialize};

use crate::dataset::{DeletionRequest, Point};
use crate::error::{Error, Result};
use crate::mechanism::{Curator, Mechanism};

use super::{AttackOutcome, Recovered};

/// Inferred old left-cluster size and number of points that jumped from the
/// left cluster to the right one (negative when they jumped the other way).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeInference {
    pub m1_old: u64,
    pub p: i64,
    /// Number of admissible `m1_old` values; the first one is reported.
    pub candidates: usize,
}

impl SizeInference {
    pub fn ambiguous(&self) -> bool {
        self.candidates > 1
    }
}

/// Recovers `(m1_old, p)` after deleting `a_star` from the right cluster.
///
/// Equating the right-cluster sums before and after the deletion gives
/// `p·(c2' − c1') = m1·(c1 − c1' − c2 + c2') + n·(c2 − c2') + c2' − a*`.
/// Each `m1 ∈ 1..n` is tried in ascending order; a candidate is admissible
/// when `p` is within `1e-6·max(1, |p|)` of an integer in `[0, m1]`.
pub fn kmeans_infer_sizes(
    old: (f64, f64),
    new: (f64, f64),
    n_before: u64,
    a_star: f64,
) -> Result<SizeInference> {
    infer(old, new, n_before, a_star, |_| 0)
}

/// [`kmeans_infer_sizes`] that also admits points jumping from the right
/// cluster to the left one: `p ∈ [−(n − m1 − 1), m1]`.
pub fn kmeans_infer_sizes_signed(
    old: (f64, f64),
    new: (f64, f64),
    n_before: u64,
    a_star: f64,
) -> Result<SizeInference> {
    infer(old, new, n_before, a_star, |m1| -((n_before - m1 - 1) as i64))
}

fn infer(
    old: (f64, f64),
    new: (f64, f64),
    n_before: u64,
    a_star: f64,
    min_p: impl Fn(u64) -> i64,
) -> Result<SizeInference> {
    let ((c1, c2), (c1n, c2n)) = (old, new);
    let denom = c2n - c1n;
    if denom == 0.0 {
        return Err(Error::DegenerateCenters);
    }
    let slope = c1 - c1n - c2 + c2n;
    let offset = n_before as f64 * (c2 - c2n) + c2n - a_star;
    let admissible: Vec<(u64, i64)> = (1..n_before)
        .filter_map(|m1| {
            let p = (m1 as f64 * slope + offset) / denom;
            let r = p.round();
            let ok = (p - r).abs() <= 1e-6 * p.abs().max(1.0) && r >= min_p(m1) as f64 && r <= m1 as f64;
            ok.then_some((m1, r as i64))
        })
        .collect();
    match admissible.first() {
        Some(&(m1_old, p)) => Ok(SizeInference {
            m1_old,
            p,
            candidates: admissible.len(),
        }),
        None => Err(Error::NoIntegerSolution),
    }
}

/// The single point that jumped out of the left cluster:
/// `m1·c1 − (m1 − 1)·c1'`.
pub fn kmeans_isolate_point(c1_old: f64, c1_new: f64, m1_old: u64) -> f64 {
    m1_old as f64 * c1_old - (m1_old - 1) as f64 * c1_new
}

/// The single point that jumped between clusters, `p = ±1`.
fn isolate(c1_old: f64, c1_new: f64, inf: SizeInference) -> Option<f64> {
    match inf.p {
        1 => Some(kmeans_isolate_point(c1_old, c1_new, inf.m1_old)),
        -1 => Some((inf.m1_old + 1) as f64 * c1_new - inf.m1_old as f64 * c1_old),
        _ => None,
    }
}

/// One deletion of the attack loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansRound {
    pub deleted: f64,
    pub n_before: u64,
    pub old: (f64, f64),
    pub new: (f64, f64),
    /// `None` when no admissible size exists. For a left-cluster deletion
    /// the sizes refer to the mirrored line, so `m1_old` is the old size of
    /// the right cluster.
    pub inference: Option<SizeInference>,
    /// Value isolated when exactly one point jumped.
    pub isolated: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansAttack {
    pub rounds: Vec<KMeansRound>,
    /// Isolated values that are not among the attacker's own points.
    pub recovered: Vec<f64>,
}

impl KMeansAttack {
    pub fn outcome(&self) -> AttackOutcome {
        let mut out = AttackOutcome::new(Recovered::Points(self.recovered.clone()), self.rounds.len() as u64);
        out.ambiguous_rounds = self
            .rounds
            .iter()
            .enumerate()
            .filter(|(_, r)| r.inference.is_some_and(|i| i.ambiguous()))
            .map(|(i, _)| i)
            .collect();
        out
    }
}

fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Deletes controlled points so as to drag the boundary left for as long as
/// possible: right-cluster points above `c2` largest first, then
/// left-cluster points above `c1` largest first, then the rest smallest
/// first. Stops after `budget` deletions. After each deletion it infers
/// `(m1_old, p)` from consecutive center pairs, falling back to signed `p`
/// when no non-negative solution exists, and isolates the jumped point
/// whenever `|p| = 1`. A left-cluster deletion is handled on the mirrored
/// line `x ↦ −x`, so its inference reports the old right-cluster size.
/// Runs until the budget or the controlled set is exhausted.
pub fn kmeans_attack_loop<M: Mechanism<Elem = Point>>(
    cur: &mut Curator<M>,
    controlled: &[f64],
    n: u64,
    budget: u64,
) -> Result<KMeansAttack> {
    let mut mine = controlled.to_vec();
    mine.sort_by(f64::total_cmp);
    let centers = |cur: &Curator<M>| {
        cur.latest()
            .centers()
            .ok_or_else(|| Error::InvalidParams("release is not a center pair".into()))
    };
    let mut rounds = Vec::new();
    let mut recovered = Vec::new();
    let mut n_before = n;
    while (rounds.len() as u64) < budget {
        if mine.is_empty() {
            break;
        }
        let old = centers(cur)?;
        let b = (old.0 + old.1) / 2.0;
        // points above their own center pull the boundary left
        let pick = if mine[mine.len() - 1] > old.1 {
            mine.len() - 1
        } else {
            mine.iter().rposition(|&x| x > old.0 && x <= b).unwrap_or(0)
        };
        let a_star = mine.remove(pick);
        cur.delete(DeletionRequest::one(Point(a_star)))?;
        let new = centers(cur)?;
        let right = a_star > (old.0 + old.1) / 2.0;
        let (o, w, a) = if right {
            (old, new, a_star)
        } else {
            ((-old.1, -old.0), (-new.1, -new.0), -a_star)
        };
        let inference = kmeans_infer_sizes(o, w, n_before, a)
            .or_else(|_| kmeans_infer_sizes_signed(o, w, n_before, a))
            .ok();
        let sign = if right { 1.0 } else { -1.0 };
        let isolated = inference.and_then(|i| isolate(o.0, w.0, i)).map(|x| sign * x);
        if let Some(x) = isolated {
            if !mine.iter().any(|&c| same_value(c, x)) && !recovered.iter().any(|&r| same_value(r, x)) {
                recovered.push(x);
            }
        }
        rounds.push(KMeansRound {
            deleted: a_star,
            n_before,
            old,
            new,
            inference,
            isolated,
        });
        n_before -= 1;
    }
    Ok(KMeansAttack { rounds, recovered })
}
