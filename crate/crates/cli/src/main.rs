use std::path::PathBuf;
use std::process::ExitCode;

use acstab::{Command, Invocation, Workers};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "acstab", version, about = "Spectral-stability experiments on tree graphs")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Root spectral density per (E, λ)
    Density(Common),
    /// (E, λ) heatmap of the pooled Im Γ₀
    PhaseSweep(Common),
    /// Run the named checks and write a JSON report
    Verify(Common),
    /// Quantum-graph bands, band-edge scan and ac-measure ladder
    Qgraph(Common),
    /// Reflection coefficient of an attached wire
    Scatter(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config, or an output file whose header embeds one
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "ACSTAB_WORKERS")]
    workers: Option<usize>,
    /// Output directory, overriding `output.dir`
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, c) = match cli.command {
        Cmd::Density(c) => (Command::Density, c),
        Cmd::PhaseSweep(c) => (Command::PhaseSweep, c),
        Cmd::Verify(c) => (Command::Verify, c),
        Cmd::Qgraph(c) => (Command::Qgraph, c),
        Cmd::Scatter(c) => (Command::Scatter, c),
    };
    let result = c
        .workers
        .map_or(Ok(Workers::available()), Workers::new)
        .and_then(|workers| {
            acstab::run(&Invocation {
                command,
                config: c.config,
                seed: c.seed,
                workers,
                out: c.out,
            })
        });
    match result {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if let Err(e) = outcome.check_status() {
                eprintln!("acstab: {e}");
                return ExitCode::from(e.exit_code() as u8);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("acstab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
