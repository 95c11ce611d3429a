use gauntlet_core::games::GameKind;

use crate::config::{ExperimentConfig, ExperimentKind, GameSpec, Generator, Params, SUITE};
use crate::error::{HarnessError, Result};

fn preset(name: &str, kind: ExperimentKind, mechanism: &str, trials: usize, params: Params) -> ExperimentConfig {
    ExperimentConfig {
        experiment: name.to_string(),
        kind,
        mechanism: mechanism.to_string(),
        attacker: Some(kind.attacker().to_string()),
        game: None,
        params,
        seed: 2024,
        trials,
        output: None,
    }
}

/// Every built-in configuration, in catalogue order.
pub fn list_presets() -> Vec<ExperimentConfig> {
    use ExperimentKind as K;
    let bq = |sigma: f64, alpha: f64| Params {
        n: Some(256),
        t: Some(16),
        k: Some(4),
        sigma: Some(sigma),
        size: Some(128),
        alpha: Some(alpha),
        ..Params::default()
    };
    let kmeans = |g| Params {
        n: Some(200),
        alpha: Some(0.2),
        generator: Some(g),
        ..Params::default()
    };
    let mut games = preset(
        "games-stateless-suite",
        K::GamesStateless,
        SUITE,
        300,
        Params {
            n: Some(24),
            k: Some(6),
            ..Params::default()
        },
    );
    games.game = Some(GameSpec {
        id: GameKind::Dynamic,
        mode: 1,
    });
    let mut leakage = preset(
        "leakage-full",
        K::Leakage,
        "exact_median",
        200,
        Params {
            n: Some(15),
            k: Some(4),
            ..Params::default()
        },
    );
    leakage.game = Some(GameSpec {
        id: GameKind::Leakage,
        mode: 1,
    });
    vec![
        preset(
            "sum-differencing",
            K::SumDifferencing,
            "dp_sum",
            100,
            Params {
                n: Some(100),
                epsilon: Some(1.0),
                ..Params::default()
            },
        ),
        preset("countmod-quadratic", K::CountmodReconstruct, "countmod", 10, Params { n: Some(64), ..Params::default() }),
        preset(
            "bq-linear",
            K::BqAttack,
            "bq_retrainer",
            10,
            Params {
                n: Some(256),
                t: Some(1),
                k: Some(1),
                sigma: Some(0.0),
                size: Some(128),
                ..Params::default()
            },
        ),
        preset("bq-omega1", K::BqAttack, "bq_retrainer", 20, bq(0.0, 0.0)),
        preset("bq-omega1-noisy", K::BqAttack, "bq_retrainer", 20, bq(1.0, 0.05)),
        preset(
            "bq-one-shot",
            K::BqOneShot,
            "bq_one_shot",
            1000,
            Params {
                n: Some(256),
                t: Some(16),
                k: Some(6),
                epsilon: Some(1.0),
                delta: Some(1e-6),
                beta: Some(0.1),
                size: Some(128),
                ..Params::default()
            },
        ),
        preset(
            "xor1",
            K::Xor1,
            "xor1",
            1000,
            Params {
                n: Some(32),
                bits: Some(8),
                deletions: Some(8),
                ..Params::default()
            },
        ),
        preset(
            "xor2",
            K::Xor2,
            "xor2",
            1000,
            Params {
                n: Some(32),
                bits: Some(8),
                deletions: Some(8),
                ..Params::default()
            },
        ),
        preset(
            "median-footnote",
            K::MedianFootnote,
            "exact_median",
            50,
            Params {
                witness_trials: Some(32),
                ..Params::default()
            },
        ),
        preset(
            "dp-median-rank",
            K::DpMedianRank,
            "dp_median",
            200,
            Params {
                n: Some(201),
                bits: Some(10),
                epsilon: Some(1.0),
                deletions: Some(32),
                ..Params::default()
            },
        ),
        preset("kmeans-uniform", K::Kmeans, "kmeans", 50, kmeans(Generator::Uniform)),
        preset("kmeans-mixture", K::Kmeans, "kmeans", 50, kmeans(Generator::Mixture)),
        games,
        leakage,
    ]
}

pub fn find_preset(name: &str) -> Result<ExperimentConfig> {
    list_presets()
        .into_iter()
        .find(|p| p.experiment == name)
        .ok_or_else(|| HarnessError::Config(format!("unknown preset `{name}`")))
}
