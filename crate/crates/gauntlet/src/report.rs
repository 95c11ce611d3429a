use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiments::{run_trial, Row};

pub const SCHEMA_VERSION: u32 = 1;
pub const ROWS_FILE: &str = "rows.csv";
pub const REPORT_FILE: &str = "report.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub p50: f64,
    pub p90: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Over the trials with a finite metric; `None` when there are none.
    pub metric: Option<Summary>,
    pub deletions_mean: f64,
    pub deletions_max: u64,
    pub verdicts: BTreeMap<String, usize>,
}

/// Hash of trial 0's row, recomputed by [`verify_report`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayCheck {
    pub trial: usize,
    pub seed: u64,
    pub row_sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub version: String,
    pub config: ExperimentConfig,
    pub aggregates: Aggregates,
    pub rows_sha256: String,
    pub replay: ReplayCheck,
    pub wall_clock_seconds: f64,
}

fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let r = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[r - 1]
}

impl Aggregates {
    pub fn from_rows(rows: &[Row]) -> Self {
        let trials = rows.len();
        let successes = rows.iter().filter(|r| r.success).count();
        let mut m: Vec<f64> = rows.iter().map(|r| r.metric).filter(|x| x.is_finite()).collect();
        m.sort_by(f64::total_cmp);
        let metric = (!m.is_empty()).then(|| Summary {
            mean: m.iter().sum::<f64>() / m.len() as f64,
            min: m[0],
            p50: nearest_rank(&m, 0.5),
            p90: nearest_rank(&m, 0.9),
            max: m[m.len() - 1],
        });
        let mut verdicts = BTreeMap::new();
        for r in rows {
            *verdicts.entry(r.verdict.clone()).or_insert(0) += 1;
        }
        let per = |x: f64| if trials == 0 { 0.0 } else { x / trials as f64 };
        Self {
            trials,
            successes,
            success_rate: per(successes as f64),
            metric,
            deletions_mean: per(rows.iter().map(|r| r.deletions_used as f64).sum()),
            deletions_max: rows.iter().map(|r| r.deletions_used).max().unwrap_or(0),
            verdicts,
        }
    }

    /// Equal up to `tol` in every float field and exactly elsewhere.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0);
        let summaries = match (&self.metric, &other.metric) {
            (None, None) => true,
            (Some(a), Some(b)) => {
                close(a.mean, b.mean) && close(a.min, b.min) && close(a.p50, b.p50) && close(a.p90, b.p90) && close(a.max, b.max)
            }
            _ => false,
        };
        summaries
            && self.trials == other.trials
            && self.successes == other.successes
            && close(self.success_rate, other.success_rate)
            && close(self.deletions_mean, other.deletions_mean)
            && self.deletions_max == other.deletions_max
            && self.verdicts == other.verdicts
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of a single row's JSON encoding.
pub fn row_digest(row: &Row) -> String {
    sha256_hex(&serde_json::to_vec(row).expect("row serializes"))
}

/// CSV encoding of `rows` with a header line.
pub fn rows_to_csv(rows: &[Row]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::io(ROWS_FILE, e))?;
    w.into_inner().map_err(|e| HarnessError::io(ROWS_FILE, e.into_error()))
}

pub fn rows_from_csv(bytes: &[u8]) -> Result<Vec<Row>> {
    csv::Reader::from_reader(bytes).deserialize().map(|r| r.map_err(HarnessError::from)).collect()
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("GAUNTLET_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| HarnessError::Config(format!("GAUNTLET_THREADS must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(HarnessError::Config("GAUNTLET_THREADS must be positive".into()));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| HarnessError::Config(format!("thread pool: {e}")))
}

/// Runs every trial of `config` in parallel; rows come back in trial order
/// and do not depend on the thread count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(ExperimentReport, Vec<Row>)> {
    config.validate()?;
    let started = Instant::now();
    let rows: Vec<Row> =
        thread_pool()?.install(|| (0..config.trials).into_par_iter().map(|i| run_trial(config, i)).collect::<Result<_>>())?;
    let csv = rows_to_csv(&rows)?;
    let report = ExperimentReport {
        schema_version: SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        aggregates: Aggregates::from_rows(&rows),
        rows_sha256: sha256_hex(&csv),
        replay: ReplayCheck {
            trial: 0,
            seed: rows[0].seed,
            row_sha256: row_digest(&rows[0]),
        },
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    Ok((report, rows))
}

/// Directory a run writes to when none is given.
pub fn default_output(config: &ExperimentConfig) -> PathBuf {
    config.output.clone().unwrap_or_else(|| PathBuf::from("runs").join(&config.experiment))
}

/// Writes `rows.csv` and `report.json` into `dir`, creating it if needed.
pub fn write_report(dir: &Path, report: &ExperimentReport, rows: &[Row]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let rows_path = dir.join(ROWS_FILE);
    fs::write(&rows_path, rows_to_csv(rows)?).map_err(|e| HarnessError::io(&rows_path, e))?;
    let report_path = dir.join(REPORT_FILE);
    let json = serde_json::to_string_pretty(report)?;
    fs::write(&report_path, json).map_err(|e| HarnessError::io(&report_path, e))
}

/// Re-derives the aggregates from `rows.csv`, checks its hash, and replays
/// trial 0 from the echoed config.
pub fn verify_report(dir: &Path) -> Result<ExperimentReport> {
    let read = |name: &str| {
        let p = dir.join(name);
        fs::read(&p).map_err(|e| HarnessError::io(&p, e))
    };
    let report: ExperimentReport = serde_json::from_slice(&read(REPORT_FILE)?)?;
    let csv = read(ROWS_FILE)?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(HarnessError::Tampered(format!("unknown schema version {}", report.schema_version)));
    }
    if sha256_hex(&csv) != report.rows_sha256 {
        return Err(HarnessError::Tampered("rows.csv hash differs from report".into()));
    }
    let rows = rows_from_csv(&csv)?;
    if rows.len() != report.config.trials {
        return Err(HarnessError::Tampered(format!("{} rows for {} trials", rows.len(), report.config.trials)));
    }
    if !Aggregates::from_rows(&rows).approx_eq(&report.aggregates, 1e-9) {
        return Err(HarnessError::Tampered("aggregates differ from rows".into()));
    }
    report.config.validate()?;
    if report.replay.trial >= rows.len() {
        return Err(HarnessError::Tampered(format!("replay trial {} out of range", report.replay.trial)));
    }
    let replay = run_trial(&report.config, report.replay.trial)?;
    let digest = row_digest(&replay);
    if digest != report.replay.row_sha256 || row_digest(&rows[report.replay.trial]) != digest {
        return Err(HarnessError::Tampered(format!("trial {} does not replay", report.replay.trial)));
    }
    Ok(report)
}
