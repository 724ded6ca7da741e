use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bohmflow::config::Scenario;
use bohmflow::runner::{self, CliError};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScenarioArg {
    SinglePacket,
    TwoSlit,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::SinglePacket => Scenario::SinglePacket,
            ScenarioArg::TwoSlit => Scenario::TwoSlit,
        }
    }
}

/// Quantum-trajectory simulator for dispersing Gaussian packets and two-slit
/// interference.
#[derive(Parser)]
#[command(name = "bohmflow", version, about)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// RNG seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides BOHMFLOW_OUTPUT_DIR and the config file).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Scenario (overrides the config file).
    #[arg(long, global = true, value_enum)]
    scenario: Option<ScenarioArg>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate rho, J, v, Q and the kinetic term on the configured grid.
    Fields,
    /// Integrate a trajectory swarm and check the non-crossing property.
    Trajectories,
    /// Simulate detection-screen exposures with optional background noise.
    Detect,
    /// Extract fringe extrema, velocity channels and the energy split.
    Analyze,
    /// Re-derive the model invariants and report pass/fail per check.
    Verify,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = runner::load_config(
        cli.config.as_deref(),
        cli.seed,
        cli.output_dir,
        cli.scenario.map(Into::into),
    )?;
    match cli.command {
        Command::Fields => runner::run_fields(&cfg),
        Command::Trajectories => runner::run_trajectories(&cfg),
        Command::Detect => runner::run_detect(&cfg),
        Command::Analyze => runner::run_analyze(&cfg),
        Command::Verify => runner::run_verify(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.stderr_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
