//! Experiment registry, seeded runner, report persistence and verification
//! for the unlearning attack and game library.

pub mod config;
pub mod error;
pub mod experiments;
pub mod presets;
pub mod report;

pub use config::{ExperimentConfig, ExperimentKind, GameSpec, Generator, Params};
pub use error::{HarnessError, Result};
pub use experiments::{run_trial, Row};
pub use presets::{find_preset, list_presets};
pub use report::{default_output, run_experiment, verify_report, write_report, Aggregates, ExperimentReport, ReplayCheck, Summary};
