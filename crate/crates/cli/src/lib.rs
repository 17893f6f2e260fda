//! Experiment runner: job configuration, the `evolve`, `trotter`, `train`
//! and `evaluate` commands, and their CSV/JSON artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{cmd_evaluate, cmd_evolve, cmd_train, cmd_trotter, RunRecord, SeedRecord};
pub use config::{parse_seed_list, JobConfig};
pub use error::{RunnerError, RunnerResult};
