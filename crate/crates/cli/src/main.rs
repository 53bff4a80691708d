mod bundle;
mod commands;
mod error;
mod range;
mod runfile;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "slipflow", version, about = "Stability of channel flow with Navier-slip walls")]
pub struct Cli {
    /// Output directory for the manifest and data files
    #[arg(long, short, global = true, env = "SLIPFLOW_OUT", default_value = "slipflow-out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Critical viscosity, closed form against the variational maximum
    CriticalViscosity(CriticalViscosityArgs),
    /// Principal growth rate over a list of squared frequencies
    Dispersion(DispersionArgs),
    /// Critical frequency as the fixed point of s² = N*(s²)
    CriticalFrequency(CriticalFrequencyArgs),
    /// Velocity and pressure of a growing wave packet
    Synthesize(SynthesizeArgs),
    /// Time integration with an energy ledger and field dumps
    Simulate(SimulateArgs),
    /// Escape time of a small growing seed
    Escape(EscapeArgs),
    /// Decay of a seed at or above the critical viscosity
    Decay(DecayArgs),
    /// Run the built-in checks and print a pass/fail table
    Verify(VerifyArgs),
    /// Stability classification over a grid of (k0, k1, mu)
    Sweep(SweepArgs),
    /// Run a command described by a `key = value` file
    Run(RunArgs),
}

/// Numbers given as `start:step:stop`, `a,b,c` or a single value.
#[derive(Clone, Debug)]
pub struct Values(pub Vec<f64>);

fn values(s: &str) -> Result<Values, String> {
    range::parse_values(s).map(Values)
}

#[derive(Args, Debug, Clone, Copy)]
pub struct Walls {
    /// Slip coefficient at y = 0
    #[arg(long, allow_hyphen_values = true)]
    pub k0: f64,
    /// Slip coefficient at y = 1
    #[arg(long, allow_hyphen_values = true)]
    pub k1: f64,
    /// Viscosity
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct CutoffArgs {
    /// Center of the frequency bump in ξ²
    #[arg(long)]
    pub center: Option<f64>,
    /// Half-width of the bump in ξ²
    #[arg(long)]
    pub halfwidth: Option<f64>,
}

#[derive(Args, Debug)]
pub struct CriticalViscosityArgs {
    #[arg(long, allow_hyphen_values = true, value_parser = values)]
    pub k0: Values,
    #[arg(long, allow_hyphen_values = true, value_parser = values)]
    pub k1: Values,
    /// Chebyshev nodes
    #[arg(long, default_value_t = 128)]
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Discrete,
    Dispersion,
    Both,
}

#[derive(Args, Debug)]
pub struct DispersionArgs {
    #[command(flatten)]
    pub walls: Walls,
    /// Squared frequencies
    #[arg(long, value_parser = values)]
    pub xi2: Values,
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 128)]
    pub n: usize,
}

#[derive(Args, Debug)]
pub struct CriticalFrequencyArgs {
    #[command(flatten)]
    pub walls: Walls,
    #[arg(long, default_value_t = 128)]
    pub n: usize,
}

#[derive(Args, Debug)]
pub struct SynthesizeArgs {
    #[command(flatten)]
    pub walls: Walls,
    #[command(flatten)]
    pub cutoff: CutoffArgs,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    /// Sample times
    #[arg(long, value_parser = values, default_value = "0")]
    pub t: Values,
    /// Sample positions along the channel
    #[arg(long, allow_hyphen_values = true, value_parser = values, default_value = "0:0.5:10")]
    pub x: Values,
    #[arg(long, default_value_t = 128)]
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Linear,
    Nonlinear,
}

#[derive(Args, Debug)]
pub struct SeedArgs {
    #[command(flatten)]
    pub cutoff: CutoffArgs,
    /// H² norm of the seed
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    /// Comb frequencies inside the support
    #[arg(long, default_value_t = slipflow::modes::DEFAULT_COMB_POINTS)]
    pub points: usize,
    /// Start from a field dump instead of an eigenmode comb
    #[arg(long)]
    pub from: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub walls: Walls,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[arg(long)]
    pub horizon: f64,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Nonlinear)]
    pub mode: ModeArg,
    /// Write a field dump every this many steps
    #[arg(long)]
    pub dump_every: Option<usize>,
    #[arg(long, default_value_t = 64)]
    pub n: usize,
}

#[derive(Args, Debug)]
pub struct EscapeArgs {
    #[command(flatten)]
    pub walls: Walls,
    #[command(flatten)]
    pub cutoff: CutoffArgs,
    /// Initial amplitudes
    #[arg(long, value_parser = values)]
    pub delta: Values,
    /// Escape threshold for the L² norm
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub horizon: f64,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 64)]
    pub n: usize,
}

#[derive(Args, Debug)]
pub struct DecayArgs {
    #[command(flatten)]
    pub walls: Walls,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[arg(long)]
    pub horizon: f64,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 64)]
    pub n: usize,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 64)]
    pub n: usize,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, allow_hyphen_values = true, value_parser = values)]
    pub k0: Values,
    #[arg(long, allow_hyphen_values = true, value_parser = values)]
    pub k1: Values,
    #[arg(long, allow_hyphen_values = true, value_parser = values)]
    pub mu: Values,
    #[arg(long, default_value_t = 64)]
    pub n: usize,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    pub file: PathBuf,
}

fn dispatch(cli: Cli) -> Result<PathBuf, CliError> {
    let out = cli.out;
    match cli.command {
        Command::CriticalViscosity(a) => commands::critical_viscosity_cmd(&out, &a),
        Command::Dispersion(a) => commands::dispersion(&out, &a),
        Command::CriticalFrequency(a) => commands::critical_frequency_cmd(&out, &a),
        Command::Synthesize(a) => commands::synthesize(&out, &a),
        Command::Simulate(a) => commands::simulate(&out, &a),
        Command::Escape(a) => commands::escape(&out, &a),
        Command::Decay(a) => commands::decay(&out, &a),
        Command::Verify(a) => verify::run(&out, &a),
        Command::Sweep(a) => commands::sweep(&out, &a),
        Command::Run(a) => {
            let argv = runfile::argv(&a.file)?;
            let inner = Cli::try_parse_from(argv).map_err(|e| CliError::Config(clap_message(&e)))?;
            if matches!(inner.command, Command::Run(_)) {
                return Err(error::config("a run file cannot name the run command"));
            }
            dispatch(inner)
        }
    }
}

/// Clap's message without the usage block, on one line.
fn clap_message(e: &clap::Error) -> String {
    let text = e.to_string();
    let lines: Vec<&str> = text
        .lines()
        .map(str::trim)
        .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
        .filter(|l| !l.is_empty())
        .collect();
    lines.join(" ").trim_start_matches("error: ").to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            let err = CliError::Config(clap_message(&e));
            eprintln!("{}", err.record());
            return ExitCode::from(2);
        }
    };
    let out = cli.out.clone();
    match dispatch(cli) {
        Ok(dir) => {
            println!("wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("{}", e.record());
            if out.is_dir() {
                let _ = std::fs::write(out.join("error.json"), e.record() + "\n");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
