//! `ssmap`: command-line front end for the sunshadow library.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::*;
use config::{CliError, CliResult, ConfigFile, ParamFlags, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "ssmap",
    version = concat!(env!("CARGO_PKG_VERSION"), " (schema 1)"),
    about = "Sun-shadow dynamics: Stark regions, brake orbits, the return map and its invariant manifolds",
    allow_negative_numbers = true
)]
struct Cli {
    /// JSON file with `params` and `seed`; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for scans and manifolds (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed of the pseudo-random property suites.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Gravitational parameter, km^3/s^2.
    #[arg(long, global = true, allow_negative_numbers = true)]
    mu: Option<f64>,
    /// Radiation acceleration, km/s^2.
    #[arg(long, global = true, allow_negative_numbers = true)]
    f: Option<f64>,
    /// Earth radius and shadow half-width, km.
    #[arg(long = "r", global = true, allow_negative_numbers = true)]
    r: Option<f64>,
    /// Escape radius, km.
    #[arg(long, global = true, allow_negative_numbers = true)]
    r_escape: Option<f64>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Region of the Stark problem and the root pattern of its quartics.
    Classify(EnergyArgs),
    /// Fictitious-time periods of the u and v oscillations.
    Periods(EnergyArgs),
    /// Zero-velocity points in the plane (CSV).
    Zvp(EnergyArgs),
    /// Brake orbit of the hybrid dynamics at one ell_s.
    Brake(EllArgs),
    /// Hyperbolic fixed points of the return map.
    Fixed(EllArgs),
    /// Map Jacobian at a section point by both methods.
    Jacobian(PointArgs),
    /// Outcome and winding of the map on a grid (CSV).
    Scan(ScanArgs),
    /// Orbit of one section point under the map (CSV).
    Iterate(IterateArgs),
    /// Area of an ellipse and of its image under the map.
    Area(AreaArgs),
    /// One branch of the stable or unstable manifold of a fixed point (CSV).
    Manifold(ManifoldArgs),
    /// Closed-form Kepler transit against the numeric flow.
    TransitCheck(TransitArgs),
    /// Integral leaps at shadow crossings along a long trajectory.
    LeapsCheck(LeapsArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Classify(_) => "classify",
            Command::Periods(_) => "periods",
            Command::Zvp(_) => "zvp",
            Command::Brake(_) => "brake",
            Command::Fixed(_) => "fixed",
            Command::Jacobian(_) => "jacobian",
            Command::Scan(_) => "scan",
            Command::Iterate(_) => "iterate",
            Command::Area(_) => "area",
            Command::Manifold(_) => "manifold",
            Command::TransitCheck(_) => "transit-check",
            Command::LeapsCheck(_) => "leaps-check",
        }
    }

    fn args(&self) -> CliResult<serde_json::Value> {
        let v = match self {
            Command::Classify(a) | Command::Periods(a) | Command::Zvp(a) => serde_json::to_value(a),
            Command::Brake(a) | Command::Fixed(a) => serde_json::to_value(a),
            Command::Jacobian(a) => serde_json::to_value(a),
            Command::Scan(a) => serde_json::to_value(a),
            Command::Iterate(a) => serde_json::to_value(a),
            Command::Area(a) => serde_json::to_value(a),
            Command::Manifold(a) => serde_json::to_value(a),
            Command::TransitCheck(a) => serde_json::to_value(a),
            Command::LeapsCheck(a) => serde_json::to_value(a),
        };
        Ok(v?)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::ConfigInvalid("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
    }
    let file = cli.config.as_deref().map(ConfigFile::load).transpose()?;
    let flags = ParamFlags {
        mu: cli.mu,
        f: cli.f,
        r: cli.r,
        r_escape: cli.r_escape,
    };
    let cfg = RunConfig::resolve(file, flags, cli.seed, cli.command.name(), cli.command.args()?)?;
    let out = cli.out.as_ref();
    match &cli.command {
        Command::Classify(a) => classify(&cfg, a, out),
        Command::Periods(a) => periods(&cfg, a, out),
        Command::Zvp(a) => zvp(&cfg, a, out),
        Command::Brake(a) => brake(&cfg, a, out),
        Command::Fixed(a) => fixed(&cfg, a, out),
        Command::Jacobian(a) => jacobian(&cfg, a, out),
        Command::Scan(a) => scan(&cfg, a, out),
        Command::Iterate(a) => iterate(&cfg, a, out),
        Command::Area(a) => area(&cfg, a, out),
        Command::Manifold(a) => manifold(&cfg, a, out),
        Command::TransitCheck(a) => transit_check(&cfg, a, out),
        Command::LeapsCheck(a) => leaps_check(cfg.clone(), a, out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ssmap: error: {e}");
            ExitCode::FAILURE
        }
    }
}
