//! `mofsim`: scenario runner for the mirror-oscillator-field model.
//!
//! Exit codes: 0 success, 1 invalid input (flags, config, unwritable output),
//! 2 numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;
mod selfcheck;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::Units;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "mofsim", version, about = "Mirror-oscillator-field optomechanics scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single MOF mirror R(ω), T(ω) on a frequency grid.
    Scatter(ScatterArgs),
    /// Barton–Calogeracos mirror R(ω), T(ω).
    Bc(BcArgs),
    /// Two-mirror cavity response on a frequency grid.
    Cavity(CavityArgs),
    /// Boxed delta-potential cavity modes.
    Modes(ConfigArgs),
    /// Nx radiation-pressure coupling per cavity mode.
    Nx(ConfigArgs),
    /// Averaged cooling coefficients across cavity lengths (writes a directory).
    CoolingSweep(ConfigArgs),
    /// Mirror trajectory under the averaged or full delay equation.
    CoolingEvolve(CoolingEvolveArgs),
    /// Lattice time-domain evolution of field and mirrors.
    Evolve(EvolveArgs),
    /// Wave-packet scattering on the lattice against the closed form.
    ScatterPacket(PacketArgs),
    /// Quantum-Brownian-motion coefficient set for static or slowly moving mirrors.
    QbmExport(QbmArgs),
    /// Run the invariant battery.
    Selfcheck(SelfcheckArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum UnitsArg {
    #[value(name = "rad_per_s")]
    RadPerS,
    #[value(name = "hz")]
    Hz,
}

impl From<UnitsArg> for Units {
    fn from(u: UnitsArg) -> Self {
        match u {
            UnitsArg::RadPerS => Units::RadPerS,
            UnitsArg::Hz => Units::Hz,
        }
    }
}

#[derive(Args, Serialize)]
struct FreqGrid {
    #[arg(long)]
    wmin: f64,
    #[arg(long)]
    wmax: f64,
    /// Number of grid points (inclusive of both ends).
    #[arg(long, default_value_t = 1000)]
    n: usize,
}

#[derive(Args, Serialize)]
struct ScatterArgs {
    #[arg(long)]
    m: f64,
    #[arg(long)]
    omega: f64,
    #[arg(long)]
    lambda: f64,
    #[command(flatten)]
    grid: FreqGrid,
    #[arg(long, value_enum, default_value = "rad_per_s")]
    units: UnitsArg,
    /// Also write `<output>.r2.dat` for gnuplot.
    #[arg(long)]
    gnuplot: bool,
    #[arg(short, long, default_value = "-")]
    #[serde(skip)]
    output: PathBuf,
}

#[derive(Args, Serialize)]
struct BcArgs {
    /// Coupling γ; alternatively give --kappa and --lambda (γ = λ²/2κ).
    #[arg(long, conflicts_with_all = ["kappa", "lambda"])]
    gamma: Option<f64>,
    #[arg(long, requires = "lambda")]
    kappa: Option<f64>,
    #[arg(long, requires = "kappa")]
    lambda: Option<f64>,
    #[command(flatten)]
    grid: FreqGrid,
    #[arg(long, value_enum, default_value = "rad_per_s")]
    units: UnitsArg,
    #[arg(long)]
    gnuplot: bool,
    #[arg(short, long, default_value = "-")]
    #[serde(skip)]
    output: PathBuf,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(short, long, default_value = "-")]
    output: PathBuf,
}

#[derive(Args)]
struct CavityArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    grid: FreqGrid,
    #[arg(short, long, default_value = "-")]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum CoolingMethod {
    Averaged,
    Full,
}

#[derive(Args)]
struct CoolingEvolveArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides integrator.t_end.
    #[arg(long)]
    t_end: Option<f64>,
    /// Overrides integrator.dt.
    #[arg(long)]
    dt: Option<f64>,
    /// Overrides integrator.method.
    #[arg(long, value_enum)]
    method: Option<CoolingMethod>,
    #[arg(short, long, default_value = "-")]
    output: PathBuf,
}

#[derive(Args)]
struct EvolveArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Final field snapshot `t,x,phi`.
    #[arg(long)]
    field: Option<PathBuf>,
    /// Binary checkpoint of the final state.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Keep each mirror's growing bound solution instead of projecting it out.
    #[arg(long)]
    keep_runaway: bool,
    #[arg(short, long, default_value = "-")]
    output: PathBuf,
}

#[derive(Args, Serialize)]
struct PacketArgs {
    #[arg(long)]
    m: f64,
    #[arg(long)]
    omega: f64,
    #[arg(long)]
    lambda: f64,
    /// Packet carrier frequency.
    #[arg(long)]
    omega0: f64,
    /// Envelope width; defaults to max(30, 25/ω₀).
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    dx: f64,
    #[arg(long, default_value_t = 0.5)]
    courant: f64,
    #[arg(long, value_enum, default_value = "rad_per_s")]
    units: UnitsArg,
    #[arg(short, long, default_value = "-")]
    #[serde(skip)]
    output: PathBuf,
}

#[derive(Args)]
struct QbmArgs {
    #[arg(long)]
    config: PathBuf,
    /// Include first-order displacement couplings (needs trap frequencies).
    #[arg(long)]
    slow: bool,
    #[arg(short, long, default_value = "-")]
    output: PathBuf,
}

#[derive(Args)]
struct SelfcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random draws per randomized check.
    #[arg(long, default_value_t = 1000)]
    draws: usize,
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Scatter(a) => commands::scatter(&a),
        Command::Bc(a) => commands::bc(&a),
        Command::Cavity(a) => commands::cavity(&a),
        Command::Modes(a) => commands::modes(&a, false),
        Command::Nx(a) => commands::modes(&a, true),
        Command::CoolingSweep(a) => commands::cooling_sweep(&a),
        Command::CoolingEvolve(a) => commands::cooling_evolve(&a),
        Command::Evolve(a) => commands::evolve(&a),
        Command::ScatterPacket(a) => commands::scatter_packet(&a),
        Command::QbmExport(a) => commands::qbm_export(&a),
        Command::Selfcheck(a) => {
            if selfcheck::run(a.seed, a.draws) {
                Ok(())
            } else {
                Err(CliError::CheckFailed("selfcheck: one or more invariants failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mofsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
