use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gauntlet::{default_output, find_preset, list_presets, run_experiment, verify_report, write_report, ExperimentConfig};

#[derive(Parser)]
#[command(name = "gauntlet", version, about = "Deletion attacks and unlearning security games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset by name or a JSON config file.
    Run {
        target: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in presets.
    List,
    /// Check a report directory against its rows and replay trial 0.
    Verify { dir: PathBuf },
}

fn load(target: &str) -> gauntlet::Result<ExperimentConfig> {
    let path = Path::new(target);
    if path.extension().is_some_and(|e| e == "json") || path.exists() {
        ExperimentConfig::load(path)
    } else {
        find_preset(target)
    }
}

fn run(cli: Cli) -> gauntlet::Result<()> {
    match cli.command {
        Command::Run { target, seed, trials, out } => {
            let mut config = load(&target)?;
            if let Some(s) = seed {
                config.seed = s;
            }
            if let Some(t) = trials {
                config.trials = t;
            }
            if let Some(o) = out {
                config.output = Some(o);
            }
            let (report, rows) = run_experiment(&config)?;
            let dir = default_output(&config);
            write_report(&dir, &report, &rows)?;
            let a = &report.aggregates;
            println!(
                "{}: {}/{} succeeded ({:.3}) in {:.2}s -> {}",
                config.experiment,
                a.successes,
                a.trials,
                a.success_rate,
                report.wall_clock_seconds,
                dir.display()
            );
        }
        Command::List => {
            for p in list_presets() {
                println!("{:<24} {:<14} trials={}", p.experiment, p.mechanism, p.trials);
            }
        }
        Command::Verify { dir } => {
            let report = verify_report(&dir)?;
            println!("OK {} ({} rows)", report.config.experiment, report.aggregates.trials);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
