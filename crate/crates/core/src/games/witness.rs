use std::fmt;

use serde::{Deserialize, Serialize};

use super::{static_game, tv_between, noise_floor, Discretizer, SideInfoFn, StaticAttacker, View};
use crate::error::{Error, Result};
use crate::mechanism::Mechanism;
use crate::rng::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// Simulator inputs agree across worlds while the real views do not, so
    /// every simulator errs in at least one world.
    #[serde(rename = "UNSAFE")]
    Unsafe,
    /// Simulator inputs and real views both agree; nothing is shown.
    #[serde(rename = "SAFE-inconclusive")]
    SafeInconclusive,
    /// Simulator inputs differ across worlds, so the pair is no witness.
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Unsafe => "UNSAFE",
            Verdict::SafeInconclusive => "SAFE-inconclusive",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

pub struct WitnessConfig<T> {
    pub trials: usize,
    pub seed: u64,
    /// Minimum fraction of coupled trials whose real views must differ.
    pub threshold: f64,
    pub feature: fn(&View<T>) -> Vec<f64>,
    pub discretizer: Discretizer,
}

impl<T: Serialize> WitnessConfig<T> {
    /// Full-view features, exact fingerprints, threshold 1/2.
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            seed,
            threshold: 0.5,
            feature: |v| v.features(),
            discretizer: Discretizer::Fingerprint,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub trials: usize,
    /// Whether `(z_0, controlled values, side info)` matched bit for bit in
    /// every coupled trial.
    pub inputs_identical: bool,
    /// Fraction of coupled trials whose real views differ.
    pub divergence: f64,
    /// Estimated distance between the real-view distributions of the worlds.
    pub real_tv: f64,
    pub noise_floor: f64,
    /// Any simulator is at least this far from the real view in some world.
    pub simulator_error_lower_bound: f64,
    pub verdict: Verdict,
}

/// Runs the static game in both worlds with coupled seeds and decides
/// whether the pair proves that no simulator exists.
pub fn simulator_blindness_witness<M, A>(
    make_mech: impl Fn() -> M,
    worlds: (&[M::Elem], &[M::Elem]),
    make_attacker: impl Fn() -> A,
    y: &[usize],
    side_info: &SideInfoFn<M::Elem>,
    config: &WitnessConfig<M::Elem>,
) -> Result<WitnessReport>
where
    M: Mechanism,
    A: StaticAttacker<M::Elem>,
{
    let (d0, d1) = worlds;
    if d0.len() != d1.len() {
        return Err(Error::InvalidWorldPair(format!("sizes {} and {} differ", d0.len(), d1.len())));
    }
    if config.trials == 0 {
        return Err(Error::InvalidParams("at least one trial is required".into()));
    }
    for &i in y {
        match (d0.get(i), d1.get(i)) {
            (Some(a), Some(b)) if a == b => {}
            (Some(_), Some(_)) => return Err(Error::InvalidWorldPair(format!("controlled entry {i} differs"))),
            _ => return Err(Error::InvalidWorldPair(format!("controlled index {i} out of range"))),
        }
    }
    let mut inputs_identical = true;
    let mut divergent = 0usize;
    let (mut f0, mut f1) = (Vec::new(), Vec::new());
    for t in 0..config.trials {
        let seed = derive_seed(config.seed, t as u64);
        let r0 = static_game(make_mech(), d0, &mut make_attacker(), y, side_info, y.len(), seed)?;
        let r1 = static_game(make_mech(), d1, &mut make_attacker(), y, side_info, y.len(), seed)?;
        let (v0, v1) = (&r0.view, &r1.view);
        inputs_identical &= v0.releases[0] == v1.releases[0]
            && v0.corrupted == v1.corrupted
            && v0.side_info == v1.side_info;
        let (a, b) = ((config.feature)(v0), (config.feature)(v1));
        let same = a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits());
        divergent += usize::from(!same);
        f0.push(a);
        f1.push(b);
    }
    let real_tv = tv_between(&f0, &f1, config.discretizer);
    let bins = distinct_bins(&f0, &f1, config.discretizer);
    let floor = noise_floor(bins, config.trials);
    let divergence = divergent as f64 / config.trials as f64;
    let verdict = if !inputs_identical {
        Verdict::Inconclusive
    } else if divergence >= config.threshold && real_tv > floor {
        Verdict::Unsafe
    } else {
        Verdict::SafeInconclusive
    };
    Ok(WitnessReport {
        trials: config.trials,
        inputs_identical,
        divergence,
        real_tv,
        noise_floor: floor,
        simulator_error_lower_bound: real_tv / 2.0,
        verdict,
    })
}

fn distinct_bins(a: &[Vec<f64>], b: &[Vec<f64>], disc: Discretizer) -> usize {
    match disc {
        Discretizer::EqualWidth(k) => k,
        _ => {
            let mut keys: Vec<Vec<u64>> = a
                .iter()
                .chain(b)
                .map(|v| match disc {
                    Discretizer::SignPattern => v.iter().map(|x| (x.signum() as i64 + 1) as u64).collect(),
                    _ => v.iter().map(|x| x.to_bits()).collect(),
                })
                .collect();
            keys.sort();
            keys.dedup();
            keys.len().max(1)
        }
    }
}
