use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dqs_cli::{cmd_evaluate, cmd_evolve, cmd_train, cmd_trotter, parse_seed_list, JobConfig};

#[derive(Debug, Parser)]
#[command(name = "dqs", version, about = "Short-circuit digital quantum simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Job configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seeds to run instead of the configured ones, e.g. `1,2,5-8`.
    #[arg(long)]
    seed_override: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Observables of the exact evolution over a time grid.
    Evolve(Common),
    /// Trotter circuits scored against the exact evolution.
    Trotter(Common),
    /// Train one agent per seed.
    Train {
        #[command(flatten)]
        common: Common,
        /// Maximum number of seeds trained in parallel.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Score a stored circuit.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Circuit JSON to evaluate.
        #[arg(long)]
        circuit: PathBuf,
    },
}

fn load(common: &Common) -> anyhow::Result<JobConfig> {
    let mut cfg = JobConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seeds) = &common.seed_override {
        cfg.seeds = parse_seed_list(seeds)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Evolve(common) => {
            cmd_evolve(&load(&common)?)?;
        }
        Command::Trotter(common) => {
            cmd_trotter(&load(&common)?)?;
        }
        Command::Train { common, jobs } => {
            let cfg = load(&common)?;
            let available = std::thread::available_parallelism().map_or(1, |n| n.get());
            let jobs = jobs.unwrap_or(available).min(cfg.seeds.len()).max(1);
            let record = cmd_train(&cfg, jobs)?;
            for s in &record.seeds {
                if let Some(best) = s.best_reward {
                    println!("{}seed {}: best reward {best}", prefix(&s.sweep), s.seed);
                }
            }
        }
        Command::Evaluate { common, circuit } => {
            cmd_evaluate(&load(&common)?, &circuit)?;
        }
    }
    Ok(())
}

fn prefix(sweep: &str) -> String {
    if sweep.is_empty() {
        String::new()
    } else {
        format!("{sweep} ")
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DQS_LOG", "info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
