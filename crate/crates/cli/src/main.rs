mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;
use output::{emit, Format};

/// Ground-state preparation and ground-energy estimation with
/// block-encoded Hamiltonians, simulated exactly.
#[derive(Parser)]
#[command(name = "qgsp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimax odd sign polynomial on [-1, -δ] ∪ [δ, 1], sampled on a grid.
    SignPoly(RunConfig),
    /// QSP phase factors for the sign polynomial.
    PhaseFactors(RunConfig),
    /// Operator-norm error of the reflector on the single-qubit family.
    ReflectorSweep(RunConfig),
    /// Ground-state preparation with a known energy bound μ.
    Prepare(RunConfig),
    /// Binary-search ground-energy estimation.
    EstimateEnergy(RunConfig),
    /// Estimate a bound, then prepare the ground state.
    PrepareUnknown(RunConfig),
    /// Low-energy state preparation without a gap.
    LowEnergy(RunConfig),
    /// Closed-form lower-bound instances checked against numerics.
    LowerboundDemo(RunConfig),
}

impl Command {
    fn split(self) -> (&'static str, RunConfig) {
        match self {
            Command::SignPoly(c) => ("sign-poly", c),
            Command::PhaseFactors(c) => ("phase-factors", c),
            Command::ReflectorSweep(c) => ("reflector-sweep", c),
            Command::Prepare(c) => ("prepare", c),
            Command::EstimateEnergy(c) => ("estimate-energy", c),
            Command::PrepareUnknown(c) => ("prepare-unknown", c),
            Command::LowEnergy(c) => ("low-energy", c),
            Command::LowerboundDemo(c) => ("lowerbound-demo", c),
        }
    }
}

fn run(name: &str, c: RunConfig) -> Result<(), CliError> {
    let c = c.resolve()?;
    let default_format = if name == "reflector-sweep" {
        "csv"
    } else {
        "json"
    };
    let format = Format::parse(c.format.as_deref().unwrap_or(default_format))?;
    let report = match name {
        "sign-poly" => commands::sign_poly(&c)?,
        "phase-factors" => commands::phase_factors(&c)?,
        "reflector-sweep" => commands::reflector_sweep(&c)?,
        "prepare" => commands::prepare(&c)?,
        "estimate-energy" => commands::estimate_energy(&c)?,
        "prepare-unknown" => commands::prepare_unknown(&c)?,
        "low-energy" => commands::low_energy(&c)?,
        _ => commands::lowerbound_demo(&c)?,
    };
    emit(&report, format, c.out.as_deref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                error::EXIT_PRECONDITION
            } else {
                0
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (name, cfg) = cli.command.split();
    match run(name, cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
