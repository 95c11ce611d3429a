//! Private hierarchical range counts over `[0, 1]` discretized into `2^L` bins.
//!
//! Bins are right-closed: bin `b` covers `(b·h, (b+1)·h]` with `h = 2^-L`, and
//! bin 0 also holds 0. A bin is reported by its right edge, so grid points
//! `0, h, 2h, …, 1` are represented exactly (0 shares bin 0 with `h`).
//!
//! Nodes are stored in level order: node `(level, j)` lives at index
//! `2^level - 1 + j` and covers leaves `[j·2^(L-level), (j+1)·2^(L-level))`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::noise::{laplace, snap};
use crate::dataset::{Multiset, Point};
use crate::error::{Error, Result};

pub const MAX_BITS: u32 = 20;

fn check_bits(bits: u32) -> Result<()> {
    if bits == 0 || bits > MAX_BITS {
        return Err(Error::InvalidParams(format!("domain bits must lie in 1..={MAX_BITS}, got {bits}")));
    }
    Ok(())
}

/// Bin index of `v` for a `2^bits`-bin domain.
pub fn bin_of(bits: u32, v: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::DomainOverflow(v));
    }
    let scaled = (v * f64::powi(2.0, bits as i32)).ceil() as usize;
    Ok(scaled.saturating_sub(1))
}

/// Right edge of bin `b`.
pub fn bin_value(bits: u32, b: usize) -> f64 {
    (b + 1) as f64 / f64::powi(2.0, bits as i32)
}

fn node_index(level: u32, j: usize) -> usize {
    (1usize << level) - 1 + j
}

/// Canonical dyadic decomposition of leaves `lo..=hi`, left to right.
fn decompose(bits: u32, lo: usize, hi: usize) -> Vec<usize> {
    fn walk(bits: u32, level: u32, j: usize, lo: usize, hi: usize, out: &mut Vec<usize>) {
        let width = 1usize << (bits - level);
        let (start, end) = (j * width, j * width + width - 1);
        if hi < start || lo > end {
            return;
        }
        if lo <= start && end <= hi {
            out.push(node_index(level, j));
            return;
        }
        walk(bits, level + 1, 2 * j, lo, hi, out);
        walk(bits, level + 1, 2 * j + 1, lo, hi, out);
    }
    let mut out = Vec::new();
    walk(bits, 0, 0, lo, hi, &mut out);
    out
}

/// A complete binary interval tree whose every node holds the exact subtree
/// count at build time plus independent Laplace noise. Exact counts are not
/// kept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeCountStructure {
    bits: u32,
    #[serde(with = "extended_f64")]
    epsilon: f64,
    counts: Vec<f64>,
}

impl RangeCountStructure {
    /// Builds the tree with Laplace((L+1)/ε) noise on every node. Each point
    /// touches one node per level and there are `L + 1` levels, so the
    /// per-level budget is `ε / (L + 1)` and the whole build is ε-DP.
    pub fn build<R: Rng + ?Sized>(data: &Multiset<Point>, bits: u32, epsilon: f64, rng: &mut R) -> Result<Self> {
        check_bits(bits)?;
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParams(format!("epsilon must be positive, got {epsilon}")));
        }
        let leaves = 1usize << bits;
        let mut counts = vec![0.0; 2 * leaves - 1];
        for (x, c) in data.iter() {
            let b = bin_of(bits, x.get())?;
            counts[node_index(bits, b)] += c as f64;
        }
        for level in (0..bits).rev() {
            for j in 0..(1usize << level) {
                counts[node_index(level, j)] =
                    counts[node_index(level + 1, 2 * j)] + counts[node_index(level + 1, 2 * j + 1)];
            }
        }
        let scale = (bits + 1) as f64 / epsilon;
        for c in counts.iter_mut() {
            *c += snap(laplace(scale, rng)?);
        }
        Ok(Self { bits, epsilon, counts })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn per_level_epsilon(&self) -> f64 {
        self.epsilon / (self.bits + 1) as f64
    }

    pub fn node_count(&self) -> usize {
        self.counts.len()
    }

    /// Level-order noisy node counts.
    pub fn nodes(&self) -> &[f64] {
        &self.counts
    }

    /// Node indices contributing to the bin range `lo..=hi`.
    pub fn decomposition(&self, lo: usize, hi: usize) -> Vec<usize> {
        decompose(self.bits, lo, hi)
    }

    /// Noisy count of bins `lo..=hi` (no deletion correction).
    pub fn noisy_bins(&self, lo: usize, hi: usize) -> f64 {
        self.decomposition(lo, hi).into_iter().map(|i| self.counts[i]).sum()
    }

    /// Leaf reached by descending towards the first bin whose corrected
    /// prefix count reaches `threshold`; left on ties.
    pub fn descend(&self, ledger: &DeletionLedger, threshold: f64) -> usize {
        let mut j = 0;
        let mut acc = 0.0;
        for level in 1..=self.bits {
            let left = node_index(level, 2 * j);
            let left_count = self.counts[left] - ledger.node(left) as f64;
            if acc + left_count >= threshold {
                j *= 2;
            } else {
                acc += left_count;
                j = 2 * j + 1;
            }
        }
        j
    }
}

/// Exact per-node counts of deleted elements, indexed like the tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeletionLedger {
    bits: u32,
    nodes: Vec<u64>,
}

impl DeletionLedger {
    pub fn new(bits: u32) -> Result<Self> {
        check_bits(bits)?;
        Ok(Self {
            bits,
            nodes: vec![0; (2usize << bits) - 1],
        })
    }

    pub fn for_structure(p: &RangeCountStructure) -> Self {
        Self {
            bits: p.bits,
            nodes: vec![0; p.node_count()],
        }
    }

    pub fn record(&mut self, v: f64, multiplicity: u64) -> Result<()> {
        let b = bin_of(self.bits, v)?;
        for level in 0..=self.bits {
            self.nodes[node_index(level, b >> (self.bits - level))] += multiplicity;
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.nodes[0]
    }

    fn node(&self, i: usize) -> u64 {
        self.nodes[i]
    }

    /// Deleted elements whose bins lie in `lo..=hi`.
    pub fn bins(&self, lo: usize, hi: usize) -> u64 {
        decompose(self.bits, lo, hi).into_iter().map(|i| self.nodes[i]).sum()
    }
}

/// `P(a, b) − #del(a, b)`: noisy count of remaining elements in `[a, b]`.
pub fn range_query(p: &RangeCountStructure, ledger: &DeletionLedger, a: f64, b: f64) -> Result<f64> {
    if !(a <= b) {
        return Err(Error::InvalidRange(a, b));
    }
    if ledger.bits != p.bits {
        return Err(Error::InvalidParams("ledger and structure disagree on domain bits".into()));
    }
    let (lo, hi) = (bin_of(p.bits, a)?, bin_of(p.bits, b)?);
    Ok(p.noisy_bins(lo, hi) - ledger.bins(lo, hi) as f64)
}

/// Serializes non-finite values as strings so `ε = ∞` survives JSON.
mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Tag(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            Repr::Num(*v)
        } else {
            Repr::Tag(if *v > 0.0 { "inf" } else { "-inf" }.into())
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Tag(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Tag(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Tag(t) => Err(serde::de::Error::custom(format!("bad float `{t}`"))),
        }
    }
}
