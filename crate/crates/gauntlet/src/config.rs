use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gauntlet_core::dp::PrivacyParams;
use gauntlet_core::games::GameKind;
use gauntlet_core::mechanisms::BqParams;
use gauntlet_core::queries::CountingQueryFamily;
use gauntlet_core::MechanismId;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// The experiment families the runner knows how to execute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SumDifferencing,
    CountmodReconstruct,
    BqAttack,
    BqOneShot,
    Xor1,
    Xor2,
    MedianFootnote,
    DpMedianRank,
    Kmeans,
    GamesStateless,
    Leakage,
}

/// Value of the `mechanism` field that rotates through the stateless
/// mechanisms trial by trial.
pub const SUITE: &str = "suite";

impl ExperimentKind {
    pub fn mechanisms(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::SumDifferencing => &["dp_sum"],
            ExperimentKind::CountmodReconstruct => &["countmod"],
            ExperimentKind::BqAttack => &["bq_retrainer"],
            ExperimentKind::BqOneShot => &["bq_one_shot"],
            ExperimentKind::Xor1 => &["xor1"],
            ExperimentKind::Xor2 => &["xor2"],
            ExperimentKind::MedianFootnote => &["exact_median", "dp_median"],
            ExperimentKind::DpMedianRank => &["dp_median"],
            ExperimentKind::Kmeans => &["kmeans"],
            ExperimentKind::GamesStateless => &[SUITE, "dp_sum", "dp_median", "sq"],
            ExperimentKind::Leakage => &["exact_median", "naive_median"],
        }
    }

    pub fn attacker(self) -> &'static str {
        match self {
            ExperimentKind::SumDifferencing | ExperimentKind::Xor1 | ExperimentKind::Xor2 => "differencing",
            ExperimentKind::CountmodReconstruct => "countmod",
            ExperimentKind::BqAttack => "bq",
            ExperimentKind::BqOneShot => "none",
            ExperimentKind::MedianFootnote => "median_exposure",
            ExperimentKind::DpMedianRank => "random_deletions",
            ExperimentKind::Kmeans => "kmeans",
            ExperimentKind::GamesStateless => "adaptive_parity",
            ExperimentKind::Leakage => "random_dynamic",
        }
    }

    fn is_game(self) -> bool {
        matches!(self, ExperimentKind::GamesStateless | ExperimentKind::Leakage)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Uniform on `[0, 1)`.
    Uniform,
    /// Equal-weight mixture of `N(0.3, 0.1²)` and `N(0.7, 0.1²)`.
    Mixture,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSpec {
    pub id: GameKind,
    pub mode: u8,
}

/// Numeric parameters. Each experiment reads the ones it needs and falls
/// back to its own defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deletions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_trials: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub kind: ExperimentKind,
    pub mechanism: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attacker: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game: Option<GameSpec>,
    #[serde(default)]
    pub params: Params,
    pub seed: u64,
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn bad(msg: impl fmt::Display) -> HarnessError {
    HarnessError::Config(msg.to_string())
}

fn check(cond: bool, msg: impl fmt::Display) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(bad(msg))
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s).map_err(bad)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn n(&self, default: u32) -> u32 {
        self.params.n.unwrap_or(default)
    }

    pub fn k(&self, default: u64) -> u64 {
        self.params.k.unwrap_or(default)
    }

    pub fn epsilon(&self, default: f64) -> f64 {
        self.params.epsilon.unwrap_or(default)
    }

    /// Seed of trial `i`: `seed + i`.
    pub fn trial_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add(i as u64)
    }

    /// Checks registry ids and re-validates the parameters against the
    /// constructors they will reach.
    pub fn validate(&self) -> Result<()> {
        check(self.trials > 0, "trials must be positive")?;
        let allowed = self.kind.mechanisms();
        check(
            allowed.contains(&self.mechanism.as_str()),
            format!("mechanism `{}` is not registered for {:?} (expected one of {allowed:?})", self.mechanism, self.kind),
        )?;
        if self.mechanism != SUITE && self.mechanism != "bq_one_shot" {
            MechanismId::from_str(&self.mechanism).map_err(bad)?;
        }
        if let Some(a) = &self.attacker {
            check(
                a == self.kind.attacker(),
                format!("attacker `{a}` is not registered for {:?} (expected `{}`)", self.kind, self.kind.attacker()),
            )?;
        }
        if let Some(g) = self.game {
            check(self.kind.is_game(), format!("{:?} takes no game", self.kind))?;
            check(g.mode <= 1, "game mode must be 0 or 1")?;
        }
        self.validate_params()
    }

    fn validate_params(&self) -> Result<()> {
        let p = &self.params;
        if let Some(e) = p.epsilon {
            check(e > 0.0, "epsilon must be positive")?;
        }
        if let Some(a) = p.alpha {
            check((0.0..1.0).contains(&a), "alpha must lie in [0, 1)")?;
        }
        if let Some(b) = p.beta {
            check(b > 0.0 && b < 1.0, "beta must lie in (0, 1)")?;
        }
        if let Some(s) = p.sigma {
            check(s >= 0.0 && s.is_finite(), "sigma must be finite and non-negative")?;
        }
        match self.kind {
            ExperimentKind::CountmodReconstruct => {
                CountingQueryFamily::new(self.n(64), self.n(64))?;
            }
            ExperimentKind::BqAttack => {
                let fam = CountingQueryFamily::new(self.n(256), p.t.unwrap_or(16))?;
                check(self.k(4) > 0, "k must be positive")?;
                check(p.size.unwrap_or(0) <= fam.n(), "size exceeds n")?;
            }
            ExperimentKind::BqOneShot => {
                self.bq_params()?.validate()?;
                self.bq_params()?.sigma()?;
            }
            ExperimentKind::Xor1 | ExperimentKind::Xor2 => {
                let d = p.bits.unwrap_or(8);
                check((1..=64).contains(&d), "bits must lie in 1..=64")?;
                check(self.n(32) >= 2, "n must be at least 2")?;
                check(p.deletions.unwrap_or(8) < self.n(32) as usize, "deletions must leave a point")?;
            }
            ExperimentKind::DpMedianRank | ExperimentKind::MedianFootnote => {
                let bits = p.bits.unwrap_or(if self.kind == ExperimentKind::DpMedianRank { 10 } else { 8 });
                check((1..=gauntlet_core::dp::MAX_BITS).contains(&bits), "bits out of range")?;
                check(bits >= 2, "bits must be at least 2")?;
                if self.kind == ExperimentKind::DpMedianRank {
                    check((p.deletions.unwrap_or(32) as u32) < self.n(201), "deletions must leave a point")?;
                }
            }
            ExperimentKind::Kmeans => {
                check(self.n(200) >= 4, "n must be at least 4")?;
                check(p.alpha.unwrap_or(0.2) > 0.0, "alpha must be positive")?;
            }
            ExperimentKind::GamesStateless | ExperimentKind::Leakage => {
                check(self.n(24) as u64 > self.k(6), "k must be below n")?;
            }
            ExperimentKind::SumDifferencing => {
                check(self.n(100) >= 1, "n must be positive")?;
            }
        }
        Ok(())
    }

    pub fn bq_params(&self) -> Result<BqParams> {
        let p = &self.params;
        Ok(BqParams {
            n: self.n(256),
            t: p.t.unwrap_or(16),
            k: self.k(6),
            privacy: PrivacyParams::new(self.epsilon(1.0), p.delta.unwrap_or(1e-6))?,
            alpha: p.alpha.unwrap_or(0.5),
            beta: p.beta.unwrap_or(0.1),
        })
    }
}
