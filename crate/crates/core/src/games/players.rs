use rand::seq::IteratorRandom;
use rand::Rng;
use serde_json::Value;

use super::{push_release, DynamicPlayer, StaticAttacker};
use crate::release::Release;
use crate::rng::{rng_from, Rng as ChaCha};

fn key(r: &Release) -> f64 {
    let mut v = Vec::new();
    push_release(&mut v, r);
    v.first().copied().unwrap_or(0.0)
}

/// Deletes in a fixed order, ignoring everything it sees.
#[derive(Clone, Debug)]
pub struct FixedOrder {
    order: Vec<usize>,
    pos: usize,
}

impl FixedOrder {
    pub fn new(order: Vec<usize>) -> Self {
        Self { order, pos: 0 }
    }
}

impl<T> StaticAttacker<T> for FixedOrder {
    fn start(&mut self, _: &[(usize, T)], _: &Value, _: &Release, _: u64) {
        self.pos = 0;
    }

    fn choose(&mut self, _remaining: &[usize]) -> usize {
        let i = self.order.get(self.pos).copied().unwrap_or(usize::MAX);
        self.pos += 1;
        i
    }

    fn observe(&mut self, _: &Release) {}
}

/// Adaptive static attacker: deletes the lowest or highest remaining index
/// depending on the parity of `⌊2^20 · z⌋` of the last release, flipped by
/// a bit of its own randomness.
#[derive(Clone, Debug, Default)]
pub struct AdaptiveParity {
    flip: bool,
    last: f64,
}

impl<T> StaticAttacker<T> for AdaptiveParity {
    fn start(&mut self, _: &[(usize, T)], _: &Value, z0: &Release, seed: u64) {
        self.flip = seed & 1 == 1;
        self.last = key(z0);
    }

    fn choose(&mut self, remaining: &[usize]) -> usize {
        let odd = ((self.last * (1u64 << 20) as f64).floor() as i64).rem_euclid(2) == 1;
        if odd ^ self.flip {
            remaining[remaining.len() - 1]
        } else {
            remaining[0]
        }
    }

    fn observe(&mut self, release: &Release) {
        self.last = key(release);
    }
}

/// Plays the dynamic game as a static attacker: corrupts all of `Y` in the
/// first round, then deletes one index per round as the inner attacker
/// chooses.
pub struct StaticAsDynamic<A> {
    inner: A,
    y: Vec<usize>,
    remaining: Vec<usize>,
    corrupted: bool,
    side: Value,
    z0: Option<Release>,
    seed: u64,
}

impl<A> StaticAsDynamic<A> {
    pub fn new(inner: A, mut y: Vec<usize>) -> Self {
        y.sort_unstable();
        y.dedup();
        Self {
            inner,
            y,
            remaining: Vec::new(),
            corrupted: false,
            side: Value::Null,
            z0: None,
            seed: 0,
        }
    }
}

impl<T, A: StaticAttacker<T>> DynamicPlayer<T> for StaticAsDynamic<A> {
    fn start(&mut self, _n: usize, side_info: &Value, z0: &Release, seed: u64) {
        self.side = side_info.clone();
        self.z0 = Some(z0.clone());
        self.seed = seed;
        self.corrupted = false;
    }

    fn corrupt(&mut self) -> Option<Vec<usize>> {
        if !self.corrupted {
            self.corrupted = true;
            self.remaining = self.y.clone();
            return Some(self.y.clone());
        }
        (!self.remaining.is_empty()).then(Vec::new)
    }

    fn reveal(&mut self, values: &[(usize, T)]) {
        if let Some(z0) = self.z0.take() {
            self.inner.start(values, &self.side, &z0, self.seed);
        }
    }

    fn delete(&mut self) -> Vec<usize> {
        if self.remaining.is_empty() {
            return Vec::new();
        }
        let i = self.inner.choose(&self.remaining);
        self.remaining.retain(|&j| j != i);
        vec![i]
    }

    fn observe(&mut self, release: &Release) {
        self.inner.observe(release);
    }
}

/// Random adaptive corruptions and deletions, stopping at random.
pub struct RandomDynamic {
    k: usize,
    n: usize,
    rng: ChaCha,
    y: Vec<usize>,
    live: Vec<usize>,
    rounds: usize,
    last: f64,
}

impl RandomDynamic {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            n: 0,
            rng: rng_from(0),
            y: Vec::new(),
            live: Vec::new(),
            rounds: 0,
            last: 0.0,
        }
    }
}

impl<T> DynamicPlayer<T> for RandomDynamic {
    fn start(&mut self, n: usize, _: &Value, z0: &Release, seed: u64) {
        self.n = n;
        self.rng = rng_from(seed);
        self.y.clear();
        self.live.clear();
        self.rounds = 0;
        self.last = key(z0);
    }

    fn corrupt(&mut self) -> Option<Vec<usize>> {
        if self.rounds >= 2 * self.k + 4 || self.rng.random_bool(0.15) {
            return None;
        }
        self.rounds += 1;
        let room = self.k.saturating_sub(self.y.len()).min(2);
        let want = self.rng.random_range(0..=room);
        let fresh: Vec<usize> = (0..self.n)
            .filter(|i| !self.y.contains(i))
            .choose_multiple(&mut self.rng, want);
        Some(fresh)
    }

    fn reveal(&mut self, values: &[(usize, T)]) {
        for (i, _) in values {
            self.y.push(*i);
            self.live.push(*i);
        }
    }

    fn delete(&mut self) -> Vec<usize> {
        let bias = if self.last.is_sign_negative() { 0.3 } else { 0.6 };
        let (gone, keep): (Vec<usize>, Vec<usize>) = self.live.iter().partition(|_| self.rng.random_bool(bias));
        self.live = keep;
        gone
    }

    fn observe(&mut self, release: &Release) {
        self.last = key(release);
    }
}

/// Ends the dynamic game immediately.
#[derive(Clone, Copy, Debug, Default)]
pub struct Quitter;

impl<T> DynamicPlayer<T> for Quitter {
    fn start(&mut self, _: usize, _: &Value, _: &Release, _: u64) {}

    fn corrupt(&mut self) -> Option<Vec<usize>> {
        None
    }

    fn reveal(&mut self, _: &[(usize, T)]) {}

    fn delete(&mut self) -> Vec<usize> {
        Vec::new()
    }

    fn observe(&mut self, _: &Release) {}
}
