//! Executable security games, simulators for stateless mechanisms, and
//! Monte-Carlo distance estimation between real and simulated views.

mod play;
mod players;
mod simulate;
mod tv;
mod witness;

pub use play::{dynamic_game, leakage_game, non_adaptive_game, static_game, DynamicPlayer, StaticAttacker};
pub use players::{AdaptiveParity, FixedOrder, Quitter, RandomDynamic, StaticAsDynamic};
pub use simulate::{stateless_simulator, FullKnowledgeSimulator, LeakageSimulator, StatelessSimulator};
pub use tv::{noise_floor, tv_between, tv_estimate, Discretizer};
pub use witness::{simulator_blindness_witness, Verdict, WitnessConfig, WitnessReport};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dataset::{Element, Multiset};
use crate::error::{Error, Result};
use crate::release::{digest_json, PublicState, Release};

/// Deterministic side information `SideInfo(D)`. A plain function pointer,
/// so it cannot capture randomness or state.
pub struct SideInfoFn<T> {
    pub name: &'static str,
    pub f: fn(&[T]) -> Value,
}

impl<T> Clone for SideInfoFn<T> {
    fn clone(&self) -> Self {
        Self {
            name: self.name,
            f: self.f,
        }
    }
}

impl<T> SideInfoFn<T> {
    pub fn none() -> Self {
        Self {
            name: "none",
            f: |_| Value::Null,
        }
    }

    pub fn size() -> Self {
        Self {
            name: "size",
            f: |d| Value::from(d.len()),
        }
    }

    pub fn apply(&self, d: &[T]) -> Value {
        (self.f)(d)
    }
}

/// Leakage `g(D)` granted to the simulator only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leakage {
    Nothing,
    Dataset,
    Histogram,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Leaked<T: Ord> {
    Nothing,
    Dataset(Vec<T>),
    Histogram(Multiset<T>),
}

impl Leakage {
    pub fn apply<T: Element>(self, d: &[T]) -> Leaked<T> {
        match self {
            Leakage::Nothing => Leaked::Nothing,
            Leakage::Dataset => Leaked::Dataset(d.to_vec()),
            Leakage::Histogram => Leaked::Histogram(d.iter().cloned().collect()),
        }
    }
}

impl<T: Element> Leaked<T> {
    /// The dataset as a multiset, when the leakage determines it.
    pub fn multiset(&self) -> Option<Multiset<T>> {
        match self {
            Leaked::Nothing => None,
            Leaked::Dataset(d) => Some(d.iter().cloned().collect()),
            Leaked::Histogram(h) => Some(h.clone()),
        }
    }
}

/// Which game produced a record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    Static,
    Dynamic,
    Leakage,
}

/// `b = 0` serves deletions with the real mechanism; `b = 1` never invokes
/// the mechanism after init and lets the player simulate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Real,
    Ideal,
}

impl Mode {
    pub fn bit(self) -> u8 {
        match self {
            Mode::Real => 0,
            Mode::Ideal => 1,
        }
    }

    pub fn from_bit(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Mode::Real),
            1 => Ok(Mode::Ideal),
            _ => Err(Error::InvalidParams(format!("mode bit must be 0 or 1, got {b}"))),
        }
    }
}

/// Everything a player saw: its randomness, the controlled values, the side
/// information, and the releases in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct View<T> {
    pub randomness: u64,
    pub corrupted: Vec<(usize, T)>,
    pub side_info: Value,
    pub releases: Vec<Release>,
    pub deletions: Vec<Vec<usize>>,
}

fn push_release(out: &mut Vec<f64>, r: &Release) {
    match r {
        Release::Scalar(v) => out.push(*v),
        Release::Vector(v) => out.extend(v),
        Release::Centers { c1, c2 } => out.extend([*c1, *c2]),
        Release::Block { index, values } => {
            out.push(*index as f64);
            out.extend(values);
        }
        Release::Bits(b) => out.push(*b as f64),
        Release::Structure { value, state } => {
            out.push(*value);
            match state {
                PublicState::RangeTree { tree, size } => {
                    out.push(*size as f64);
                    out.extend(tree.nodes());
                }
                PublicState::Sums(s) => out.extend(s),
            }
        }
    }
}

impl<T: Serialize> View<T> {
    /// Release payloads followed by the deletion order, flattened.
    pub fn features(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for r in &self.releases {
            push_release(&mut out, r);
        }
        for batch in &self.deletions {
            out.push(-1.0);
            out.extend(batch.iter().map(|&i| i as f64));
        }
        out
    }

    /// Scalar payload of each release after the first.
    pub fn post_deletion_scalars(&self) -> Vec<f64> {
        self.releases.iter().skip(1).filter_map(Release::scalar).collect()
    }
}

/// One loop iteration of the dynamic game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub corrupt: Vec<usize>,
    pub delete: Vec<usize>,
    pub release: Option<Release>,
}

/// The `(Y, v)` output of a game plus its bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameRecord<T> {
    pub game: GameKind,
    pub mode: u8,
    #[serde(rename = "Y")]
    pub y: Vec<usize>,
    #[serde(rename = "R")]
    pub r: Vec<usize>,
    pub rounds: Vec<RoundLog>,
    pub view: View<T>,
    pub transcript_hash: String,
}

impl<T: Serialize> GameRecord<T> {
    pub(crate) fn seal(
        game: GameKind,
        mode: Mode,
        y: Vec<usize>,
        r: Vec<usize>,
        rounds: Vec<RoundLog>,
        view: View<T>,
    ) -> Self {
        let transcript_hash = digest_json(&view.releases);
        Self {
            game,
            mode: mode.bit(),
            y,
            r,
            rounds,
            view,
            transcript_hash,
        }
    }

    /// Replays the rounds and checks `R ⊆ Y`, `|Y| ≤ k`, and that every
    /// deletion set lies in `Y` and avoids earlier deletions.
    pub fn bookkeeping_holds(&self, k: usize) -> bool {
        let mut y = std::collections::BTreeSet::new();
        let mut r = std::collections::BTreeSet::new();
        for round in &self.rounds {
            y.extend(round.corrupt.iter().copied());
            if y.len() > k {
                return false;
            }
            for j in &round.delete {
                if !y.contains(j) || !r.insert(*j) {
                    return false;
                }
            }
        }
        y.into_iter().eq(self.y.iter().copied()) && r.into_iter().eq(self.r.iter().copied())
    }
}

/// Summary row for one game experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameResult {
    pub game: GameKind,
    pub mode: u8,
    #[serde(rename = "Y")]
    pub y: Vec<usize>,
    pub tv: f64,
    pub verdict: String,
    pub seed: u64,
    pub trials: usize,
}
