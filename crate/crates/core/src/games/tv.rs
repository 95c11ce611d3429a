use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::derive_seed;

/// Maps a feature vector to a histogram bin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discretizer {
    /// Exact bit pattern of the whole vector.
    Fingerprint,
    /// Equal-width bins over the pooled range of the first coordinate.
    EqualWidth(usize),
    /// Sign of every coordinate.
    SignPattern,
}

fn keys(samples: &[Vec<f64>], disc: Discretizer, range: (f64, f64)) -> Vec<Vec<u64>> {
    samples
        .iter()
        .map(|v| match disc {
            Discretizer::Fingerprint => v.iter().map(|x| x.to_bits()).collect(),
            Discretizer::EqualWidth(bins) => {
                let x = v.first().copied().unwrap_or(0.0);
                let (lo, hi) = range;
                let b = if hi > lo {
                    (((x - lo) / (hi - lo) * bins as f64) as usize).min(bins.saturating_sub(1))
                } else {
                    0
                };
                vec![b as u64]
            }
            Discretizer::SignPattern => v.iter().map(|x| (x.signum() as i64 + 1) as u64).collect(),
        })
        .collect()
}

fn pooled_range(a: &[Vec<f64>], b: &[Vec<f64>]) -> (f64, f64) {
    a.iter()
        .chain(b)
        .filter_map(|v| v.first().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

/// Total-variation distance between the two empirical distributions after
/// discretization.
pub fn tv_between(a: &[Vec<f64>], b: &[Vec<f64>], disc: Discretizer) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.len() == b.len() { 0.0 } else { 1.0 };
    }
    let range = pooled_range(a, b);
    let mut hist: HashMap<Vec<u64>, (usize, usize)> = HashMap::new();
    for k in keys(a, disc, range) {
        hist.entry(k).or_default().0 += 1;
    }
    for k in keys(b, disc, range) {
        hist.entry(k).or_default().1 += 1;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    0.5 * hist
        .values()
        .map(|&(ca, cb)| (ca as f64 / na - cb as f64 / nb).abs())
        .sum::<f64>()
}

/// Estimates the distance between two samplers from `trials` draws each.
/// Draw `i` of both samplers uses the same derived seed.
pub fn tv_estimate<A, B>(sampler_a: A, sampler_b: B, trials: usize, seed: u64, disc: Discretizer) -> f64
where
    A: Fn(u64) -> Vec<f64> + Sync,
    B: Fn(u64) -> Vec<f64> + Sync,
{
    let (a, b): (Vec<_>, Vec<_>) = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, i);
            (sampler_a(s), sampler_b(s))
        })
        .unzip();
    tv_between(&a, &b, disc)
}

/// Sampling noise floor `2·sqrt(K/N)` for `K` bins and `N` samples.
pub fn noise_floor(bins: usize, trials: usize) -> f64 {
    2.0 * (bins as f64 / trials as f64).sqrt()
}
