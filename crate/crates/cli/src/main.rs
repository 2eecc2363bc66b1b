//! `visco`: command-line harnesses over `visco-core`.
//!
//! Exit codes: 0 pass, 1 check failure, 2 configuration error, 3 numerical abort.

mod commands;
mod config;
mod svg;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use config::{Overrides, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical abort: {m}"),
        }
    }
}

impl From<visco_core::Error> for CliError {
    fn from(e: visco_core::Error) -> Self {
        use visco_core::Error as E;
        match e {
            E::PressureNonconvergence { .. } | E::Cfl { .. } | E::StepRejected { .. } | E::Admissibility { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("i/o: {e}"))
    }
}

/// Result of a completed subcommand.
pub enum Outcome {
    Pass,
    Fail(Vec<String>),
    Abort(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Transport,
    Momentum,
    Mixed,
    Product,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Partition of unity, quasi-orthogonality and Bernstein ratios of the dyadic blocks.
    LpCheck,
    /// Paraproduct/remainder reconstruction of products over a seeded ensemble.
    BonyCheck,
    /// Product or linear a priori estimate checks.
    Estimates {
        #[arg(long, value_enum)]
        which: Which,
    },
    /// Eigenvalues and regimes of the damped mixed system per wavenumber.
    LinearSpectrum,
    /// Nonlinear run with diagnostics, checkpoints and the bootstrap monitor.
    Simulate,
    /// Small-data sweep of the global functional over amplitudes and seeds.
    Sweep,
    /// Admissible initial data with a certificate.
    GenData,
    /// Print every configuration key with its type, default and description.
    Schema,
}

#[derive(Parser, Debug)]
#[command(name = "visco", version, about = "Harnesses for density-dependent incompressible viscoelastic flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Points per axis.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Viscosity.
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    dry_run: bool,
    /// Skip SVG plots.
    #[arg(long, global = true)]
    no_svg: bool,
}

fn parse_cli() -> Cli {
    let help = format!("Default configuration:\n\n{}", RunConfig::default().to_toml());
    let matches = Cli::command().after_long_help(help).get_matches();
    Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit())
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    if let Command::Schema = cli.command {
        let schema = serde_json::to_string_pretty(&config::schema()).expect("schema serializes");
        println!("{schema}");
        return Ok(Outcome::Pass);
    }
    let overrides = Overrides {
        seed: cli.seed,
        grid: cli.grid,
        mu: cli.mu,
        out: cli.out.clone(),
        no_svg: cli.no_svg,
    };
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    if cli.dry_run {
        print!("{}", cfg.to_toml());
        return Ok(Outcome::Pass);
    }
    match &cli.command {
        Command::LpCheck => commands::checks::lp_check(&cfg),
        Command::BonyCheck => commands::checks::bony_check(&cfg),
        Command::Estimates { which } => commands::estimates::estimates(&cfg, *which),
        Command::LinearSpectrum => commands::checks::linear_spectrum(&cfg),
        Command::Simulate => commands::runs::simulate(&cfg),
        Command::Sweep => commands::runs::sweep(&cfg),
        Command::GenData => commands::runs::gen_data(&cfg),
        Command::Schema => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = parse_cli();
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail(checks)) => {
            eprintln!("failed checks: {}", checks.join(", "));
            ExitCode::from(1)
        }
        Ok(Outcome::Abort(reason)) => {
            eprintln!("numerical abort: {reason}");
            ExitCode::from(3)
        }
        Err(e @ CliError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e @ CliError::Numerical(_)) => {
            eprintln!("{e}");
            ExitCode::from(3)
        }
    }
}
