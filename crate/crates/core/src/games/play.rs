use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::Value;

use super::{GameKind, GameRecord, Leakage, Mode, RoundLog, SideInfoFn, View};
use crate::dataset::{DeletionRequest, Element, Multiset};
use crate::error::{Error, Result};
use crate::mechanism::{Curator, Mechanism};
use crate::release::{MechanismTranscript, Release};
use crate::rng::derive_seed;

/// Runs `init` and then the given deletions one at a time.
pub fn non_adaptive_game<M>(mech: M, d: Multiset<M::Elem>, deletions: &[M::Elem], seed: u64) -> Result<MechanismTranscript<M::Elem>>
where
    M: Mechanism,
{
    let mut budget = d.clone();
    for y in deletions {
        if budget.remove(y, 1).is_err() {
            return Err(Error::DuplicateDeletion(y.to_string()));
        }
    }
    let mut cur = Curator::start(mech, d, seed)?;
    for y in deletions {
        cur.delete(DeletionRequest::one(y.clone()))?;
    }
    Ok(cur.into_transcript())
}

/// An attacker for the static game: it sees its controlled points, the side
/// information and `z_0`, then picks one controlled index per round.
pub trait StaticAttacker<T> {
    fn start(&mut self, controlled: &[(usize, T)], side_info: &Value, z0: &Release, seed: u64);

    /// Next index to delete, from the controlled indices not yet deleted.
    fn choose(&mut self, remaining: &[usize]) -> usize;

    fn observe(&mut self, release: &Release);
}

fn dataset<T: Element>(d: &[T]) -> Multiset<T> {
    d.iter().cloned().collect()
}

fn check_indices(ids: &[usize], n: usize) -> Result<()> {
    match ids.iter().find(|&&i| i >= n) {
        Some(i) => Err(Error::ProtocolViolation(format!("index {i} outside the dataset"))),
        None => Ok(()),
    }
}

/// The static game: the attacker controls `D|_Y`, observes `z_0`, and
/// adaptively deletes each controlled point once.
pub fn static_game<M, A>(
    mech: M,
    d: &[M::Elem],
    attacker: &mut A,
    y: &[usize],
    side_info: &SideInfoFn<M::Elem>,
    k: usize,
    seed: u64,
) -> Result<GameRecord<M::Elem>>
where
    M: Mechanism,
    A: StaticAttacker<M::Elem> + ?Sized,
{
    let ys: BTreeSet<usize> = y.iter().copied().collect();
    if ys.len() != y.len() {
        return Err(Error::ProtocolViolation("Y repeats an index".into()));
    }
    if ys.len() > k {
        return Err(Error::ProtocolViolation(format!("|Y| = {} exceeds k = {k}", ys.len())));
    }
    check_indices(y, d.len())?;
    let side = side_info.apply(d);
    let mut cur = Curator::start(mech, dataset(d), derive_seed(seed, 0))?;
    let z0 = cur.initial().clone();
    let controlled: Vec<(usize, M::Elem)> = ys.iter().map(|&i| (i, d[i].clone())).collect();
    let player_seed = derive_seed(seed, 1);
    attacker.start(&controlled, &side, &z0, player_seed);

    let mut rounds = vec![RoundLog {
        corrupt: ys.iter().copied().collect(),
        delete: vec![],
        release: None,
    }];
    let mut remaining: Vec<usize> = ys.iter().copied().collect();
    let mut releases = vec![z0];
    let mut order = Vec::new();
    while !remaining.is_empty() {
        let i = attacker.choose(&remaining);
        let pos = remaining
            .iter()
            .position(|&j| j == i)
            .ok_or_else(|| Error::ProtocolViolation(format!("index {i} is not an undeleted controlled index")))?;
        remaining.remove(pos);
        let z = cur.delete(DeletionRequest::one(d[i].clone()))?.clone();
        attacker.observe(&z);
        rounds.push(RoundLog {
            corrupt: vec![],
            delete: vec![i],
            release: Some(z.clone()),
        });
        releases.push(z);
        order.push(vec![i]);
    }
    let view = View {
        randomness: player_seed,
        corrupted: controlled,
        side_info: side,
        releases,
        deletions: order,
    };
    let all: Vec<usize> = ys.into_iter().collect();
    Ok(GameRecord::seal(GameKind::Static, Mode::Real, all.clone(), all, rounds, view))
}

/// A player of the dynamic game. In mode `b = 0` it is the attacker and
/// receives real releases through [`DynamicPlayer::observe`]; in mode `b = 1`
/// it is the simulator and must produce each release itself.
pub trait DynamicPlayer<T> {
    fn start(&mut self, n: usize, side_info: &Value, z0: &Release, seed: u64);

    /// `I_ℓ`, or `None` to end the game.
    fn corrupt(&mut self) -> Option<Vec<usize>>;

    fn reveal(&mut self, values: &[(usize, T)]);

    /// `J_ℓ ⊆ Y ∖ R`.
    fn delete(&mut self) -> Vec<usize>;

    fn observe(&mut self, release: &Release);

    /// The simulated release for the deletion of `deleted` (mode `b = 1`).
    fn simulate(&mut self, _deleted: &[(usize, T)]) -> Result<Release> {
        Err(Error::ProtocolViolation("this player cannot simulate".into()))
    }

    /// Replacement for `z_0` in the simulated view, if the player produces
    /// its own.
    fn initial_view(&self) -> Option<Release> {
        None
    }
}

fn max_rounds(k: usize) -> usize {
    4 * k + 16
}

/// The dynamic game with mode bit `b`. Deletion sets are served as one
/// batched mechanism call each; in mode `b = 1` the mechanism is never
/// called after init.
pub fn dynamic_game<M, P>(
    mech: M,
    d: &[M::Elem],
    player: &mut P,
    side_info: &SideInfoFn<M::Elem>,
    mode: Mode,
    k: usize,
    seed: u64,
) -> Result<GameRecord<M::Elem>>
where
    M: Mechanism,
    M::Elem: Serialize,
    P: DynamicPlayer<M::Elem> + ?Sized,
{
    dynamic_game_kind(GameKind::Dynamic, mech, d, player, side_info, mode, k, seed)
}

#[allow(clippy::too_many_arguments)]
fn dynamic_game_kind<M, P>(
    kind: GameKind,
    mech: M,
    d: &[M::Elem],
    player: &mut P,
    side_info: &SideInfoFn<M::Elem>,
    mode: Mode,
    k: usize,
    seed: u64,
) -> Result<GameRecord<M::Elem>>
where
    M: Mechanism,
    M::Elem: Serialize,
    P: DynamicPlayer<M::Elem> + ?Sized,
{
    let side = side_info.apply(d);
    let mut cur = Curator::start(mech, dataset(d), derive_seed(seed, 0))?;
    let z0 = cur.initial().clone();
    let player_seed = derive_seed(seed, 1);
    player.start(d.len(), &side, &z0, player_seed);

    let mut y: BTreeSet<usize> = BTreeSet::new();
    let mut r: BTreeSet<usize> = BTreeSet::new();
    let mut corrupted = Vec::new();
    let mut rounds = Vec::new();
    let mut releases = Vec::new();
    let mut order = Vec::new();
    while let Some(i_l) = player.corrupt() {
        if rounds.len() >= max_rounds(k) {
            return Err(Error::ProtocolViolation(format!("game exceeded {} rounds", max_rounds(k))));
        }
        check_indices(&i_l, d.len())?;
        let fresh: Vec<usize> = i_l.iter().copied().filter(|i| !y.contains(i)).collect::<BTreeSet<_>>().into_iter().collect();
        if y.len() + fresh.len() > k {
            return Err(Error::ProtocolViolation(format!("corrupting {:?} exceeds k = {k}", i_l)));
        }
        y.extend(fresh.iter().copied());
        let revealed: Vec<(usize, M::Elem)> = fresh.iter().map(|&i| (i, d[i].clone())).collect();
        player.reveal(&revealed);
        corrupted.extend(revealed);

        let j_l = player.delete();
        let js: BTreeSet<usize> = j_l.iter().copied().collect();
        if js.len() != j_l.len() || js.iter().any(|j| !y.contains(j) || r.contains(j)) {
            return Err(Error::ProtocolViolation(format!("deletion set {j_l:?} is not a subset of Y \\ R")));
        }
        let release = if js.is_empty() {
            None
        } else {
            r.extend(js.iter().copied());
            let deleted: Vec<(usize, M::Elem)> = js.iter().map(|&j| (j, d[j].clone())).collect();
            let z = match mode {
                Mode::Real => {
                    let batch: Vec<_> = deleted.iter().map(|(_, x)| DeletionRequest::one(x.clone())).collect();
                    let z = cur.delete_batch(batch)?.clone();
                    player.observe(&z);
                    z
                }
                Mode::Ideal => player.simulate(&deleted)?,
            };
            releases.push(z.clone());
            order.push(js.iter().copied().collect());
            Some(z)
        };
        rounds.push(RoundLog {
            corrupt: fresh,
            delete: js.into_iter().collect(),
            release,
        });
    }
    let initial = match mode {
        Mode::Real => z0,
        Mode::Ideal => player.initial_view().unwrap_or(z0),
    };
    releases.insert(0, initial);
    let view = View {
        randomness: player_seed,
        corrupted,
        side_info: side,
        releases,
        deletions: order,
    };
    Ok(GameRecord::seal(kind, mode, y.into_iter().collect(), r.into_iter().collect(), rounds, view))
}

/// Runs the dynamic game with `b = 0` against `attacker` and with `b = 1`
/// against `simulator`, which first receives `g(D)`.
#[allow(clippy::too_many_arguments)]
pub fn leakage_game<M, A, S>(
    make_mech: impl Fn() -> M,
    d: &[M::Elem],
    attacker: &mut A,
    simulator: &mut S,
    g: Leakage,
    side_info: &SideInfoFn<M::Elem>,
    k: usize,
    seed: u64,
) -> Result<(GameRecord<M::Elem>, GameRecord<M::Elem>)>
where
    M: Mechanism,
    M::Elem: Serialize,
    A: DynamicPlayer<M::Elem> + ?Sized,
    S: super::LeakageSimulator<M::Elem> + ?Sized,
{
    let real = dynamic_game_kind(GameKind::Leakage, make_mech(), d, attacker, side_info, Mode::Real, k, seed)?;
    simulator.preload(g.apply(d));
    let ideal = dynamic_game_kind(GameKind::Leakage, make_mech(), d, simulator, side_info, Mode::Ideal, k, seed)?;
    Ok((real, ideal))
}
