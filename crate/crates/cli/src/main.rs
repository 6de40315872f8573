//! `budgeted-bandit`: run constrained bandit experiments and write
//! plot-ready CSVs.
//!
//! Exit codes: 0 on success, 1 for configuration errors, 2 for runtime
//! errors (I/O failures or runs that did not complete).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use budgeted_bandit::output::{emit_outputs, emit_scalability};
use budgeted_bandit::{run_experiment, run_scalability, Error, ExperimentConfig, PolicyKind, ScheduleKind};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "budgeted-bandit", version, about = "Budgeted UCB experiments on a simulated wireless link")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment and write traces, aggregate curves and a manifest.
    Run {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the linear-schedule experiment for several arm counts.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated arm counts.
        #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,25,30")]
        arms: Vec<usize>,
    },
    /// Parse and validate a config file, then print its normalised form.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Key-value config file; unset keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Number of seeds; uses seeds 1..=n.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long, value_parser = parse_schedule)]
    schedule: Option<ScheduleKind>,
    /// Comma-separated subset of budgeted_ucb,ucb1,thompson,epsilon_greedy,virtual_queue.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    policies: Option<Vec<String>>,
    #[arg(long)]
    horizon: Option<u64>,
}

fn parse_schedule(s: &str) -> Result<ScheduleKind, String> {
    s.parse()
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    let Some(path) = path else {
        return Ok(ExperimentConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(ExperimentConfig::parse_with(&text, &["code_version"])?)
}

impl CommonArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = load_config(self.config.as_deref())?;
        if let Some(n) = self.seeds {
            cfg.seeds = (1..=n).collect();
        }
        if let Some(s) = self.schedule {
            cfg.schedule = s;
        }
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        if let Some(list) = &self.policies {
            cfg.policies = list
                .iter()
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<PolicyKind>())
                .collect::<Result<_, _>>()
                .map_err(|e| Failure::Config(format!("--policies: {e}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { common } => {
            let cfg = common.resolve()?;
            let artifact = run_experiment(&cfg)?;
            let files = emit_outputs(&artifact, &common.out)?;
            println!("wrote {} files to {}", files.len(), common.out.display());
            for (policy, agg) in &artifact.aggregates {
                println!(
                    "{policy:<15} V(T)={:>9.1} objective={:>14.6e} |regret|={:>14.6e}",
                    agg.cumulative_violations.last_mean().unwrap_or(0.0),
                    agg.overall_objective.last_mean().unwrap_or(0.0),
                    agg.absolute_regret.last_mean().unwrap_or(0.0),
                );
            }
            if !artifact.failures.is_empty() {
                return Err(Failure::Runtime(format!("{} run(s) failed", artifact.failures.len())));
            }
            Ok(())
        }
        Command::Sweep { common, arms } => {
            let cfg = common.resolve()?;
            if let Some(bad) = arms.iter().find(|&&k| k < 2) {
                return Err(Failure::Config(format!("--arms: K must be at least 2, got {bad}")));
            }
            let table = run_scalability(&cfg, &arms)?;
            let path = emit_scalability(&table, &common.out)?;
            println!("wrote {}", path.display());
            if !table.failures.is_empty() {
                return Err(Failure::Runtime(format!("{} run(s) failed", table.failures.len())));
            }
            Ok(())
        }
        Command::ValidateConfig { config } => {
            let cfg = load_config(Some(&config))?;
            cfg.validate()?;
            print!("{}", cfg.to_kv_string());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
