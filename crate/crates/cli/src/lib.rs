//! Experiment runner: JSON configs in, CSV/JSON/SVG artifacts out.

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod parallel;
pub mod sampling;

use std::path::PathBuf;

pub use commands::Outcome;
pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use parallel::Workers;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Density,
    PhaseSweep,
    Verify,
    Qgraph,
    Scatter,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Density => "density",
            Command::PhaseSweep => "phase-sweep",
            Command::Verify => "verify",
            Command::Qgraph => "qgraph",
            Command::Scatter => "scatter",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub workers: Workers,
    pub out: Option<PathBuf>,
}

/// Load, override and validate the config for an invocation.
pub fn prepare(inv: &Invocation) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&inv.config)?.with_seed(inv.seed);
    if let Some(dir) = &inv.out {
        cfg.output.dir = dir.display().to_string();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Run one command. A verification run with failing checks still writes
/// its report and then returns [`CliError::ChecksFailed`].
pub fn run(inv: &Invocation) -> CliResult<Outcome> {
    let cfg = prepare(inv)?;
    run_config(inv.command, &cfg, inv.workers)
}

pub fn run_config(command: Command, cfg: &ExperimentConfig, workers: Workers) -> CliResult<Outcome> {
    match command {
        Command::Density => commands::density(cfg, workers),
        Command::PhaseSweep => commands::phase_sweep(cfg, workers),
        Command::Qgraph => commands::qgraph(cfg, workers),
        Command::Scatter => commands::scatter(cfg, workers),
        Command::Verify => commands::verify(cfg, workers),
    }
}
