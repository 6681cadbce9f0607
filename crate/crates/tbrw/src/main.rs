use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tbrw::{run_experiment, Experiment, ExperimentConfig, Overrides, RunError};

/// Run one tree builder random walk experiment from a JSON config.
#[derive(Parser, Debug)]
#[command(name = "tbrw", version)]
struct Cli {
    /// Experiment name; must match the config's `experiment` field.
    experiment: String,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    horizon: Option<u64>,
    /// Output directory (default `out/<experiment>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

fn execute(cli: Cli) -> Result<tbrw::Outcome, RunError> {
    let requested = Experiment::parse(&cli.experiment)?;
    let overrides = Overrides {
        seed: cli.seed,
        replicas: cli.replicas,
        horizon: cli.horizon,
        out: cli.out,
        workers: cli.workers,
    };
    let cfg = ExperimentConfig::from_file(&cli.config, &overrides)?;
    if cfg.experiment != requested {
        return Err(RunError::config(
            "experiment",
            format!(
                "config is for `{}`, not `{}`",
                cfg.experiment.name(),
                requested.name()
            ),
        ));
    }
    run_experiment(&cfg)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(outcome) => {
            let m = &outcome.manifest;
            println!(
                "{}: {} outputs in {} ms (config {})",
                m.experiment,
                m.outputs.len(),
                m.wall_time_ms,
                &m.config_hash[..12]
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
