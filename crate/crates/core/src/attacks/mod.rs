//! Attackers that drive a mechanism through its deletion interface and
//! extract a reconstruction or a secret.

mod bq;
mod countmod;
mod differencing;
mod kmeans;

pub use bq::{bq_attack, bq_dataset};
pub use countmod::{countmod_dataset, countmod_query_attack, countmod_reconstruct};
pub use differencing::{differencing_all, differencing_attack, median_exposure_attack, xor_differencing_attack};
pub use kmeans::{
    kmeans_attack_loop, kmeans_infer_sizes, kmeans_infer_sizes_signed, kmeans_isolate_point, KMeansAttack, KMeansRound, SizeInference,
};

use serde::{Deserialize, Serialize};

/// What an attack extracted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recovered {
    Subset(Vec<u32>),
    Scalar(f64),
    Points(Vec<f64>),
    Bits(Vec<u64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub recovered: Recovered,
    /// Copies deleted, counting multiplicity.
    pub deletions_used: u64,
    /// Attack-specific success metric, e.g. `|D △ D̂|`, when ground truth is known.
    pub metric: Option<f64>,
    /// Rounds whose inference had more than one admissible answer.
    pub ambiguous_rounds: Vec<usize>,
}

impl AttackOutcome {
    pub fn new(recovered: Recovered, deletions_used: u64) -> Self {
        Self {
            recovered,
            deletions_used,
            metric: None,
            ambiguous_rounds: Vec::new(),
        }
    }

    pub fn with_metric(mut self, metric: f64) -> Self {
        self.metric = Some(metric);
        self
    }
}
