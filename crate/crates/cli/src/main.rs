//! `deception`: deception exponents, rate-distortion curves, coverings and
//! guessing attacks from the command line.
//!
//! Exit codes: 0 success, 2 invalid input, 3 solver did not converge at a
//! reported point, 4 instance above a size limit.

mod commands;
mod error;
mod output;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{Context, Outcome};
use crate::error::CliError;
use crate::output::{emit, Render};
use crate::spec::{DistortionField, Format, Loaded, Mode, Problem, Units};

#[derive(Parser)]
#[command(
    name = "deception",
    version,
    about = "Guessing with a distortion budget: exponents, coverings and attacks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Deception exponent E(D), or E_Z(D) for a joint source.
    Exponent(Common),
    /// E over a grid of D with argmax, R(D,P) and a converse bound (CSV).
    Sweep(Common),
    /// Build the constructive strategy at length n and measure E[G].
    Attack(Common),
    /// Greedy covering of one type class; writes the strategy to --out.
    Covering(Common),
    /// Rate-distortion curve of the source.
    RdCurve(Common),
}

/// Flags shared by every subcommand. Flags override spec file fields.
#[derive(Args)]
struct Common {
    /// JSON problem file.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Source pmf, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    source: Option<Vec<f64>>,
    /// Distortion measure name (only `hamming`).
    #[arg(long)]
    distortion: Option<String>,
    /// Distortion limit.
    #[arg(long = "D")]
    d: Option<f64>,
    /// Ascending grid of distortion limits, comma-separated.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Sequence length.
    #[arg(long)]
    n: Option<usize>,
    /// Monte Carlo trials.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, value_enum)]
    units: Option<Units>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Type counts for `covering`, comma-separated.
    #[arg(long, value_delimiter = ',')]
    counts: Option<Vec<usize>>,
    /// Optimizer grid resolution.
    #[arg(long)]
    resolution: Option<f64>,
    /// Epsilon of the converse bound.
    #[arg(long)]
    eps: Option<f64>,
    /// Output file (written atomically). For `covering`, the strategy file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print reals at full precision instead of 6 significant digits.
    #[arg(long)]
    full_precision: bool,
}

impl Common {
    fn load(&self, needs_source: bool) -> Result<Loaded, CliError> {
        let mut loaded = match &self.spec {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                Loaded::from_text(text)?
            }
            None => Loaded::from_flags(),
        };
        let s = &mut loaded.spec;
        if let Some(v) = &self.source {
            s.source = Some(v.clone());
            s.joint = None;
        }
        if let Some(v) = &self.distortion {
            s.distortion = Some(DistortionField::Named(v.clone()));
        }
        macro_rules! over {
            ($($field:ident <- $flag:ident),*) => {
                $(if let Some(v) = self.$flag.clone() { s.$field = Some(v); })*
            };
        }
        over!(d <- d, grid <- grid, n <- n, trials <- trials, seed <- seed, mode <- mode,
              units <- units, format <- format, type_counts <- counts,
              grid_resolution <- resolution, converse_eps <- eps);
        if !needs_source && s.source.is_none() && s.joint.is_none() {
            if let Some(counts) = &s.type_counts {
                s.source = Some(commands::uniform(counts.len())?.probs().to_vec());
            }
        }
        Ok(loaded)
    }
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let (common, name) = match &cli.command {
        Command::Exponent(c) => (c, "exponent"),
        Command::Sweep(c) => (c, "sweep"),
        Command::Attack(c) => (c, "attack"),
        Command::Covering(c) => (c, "covering"),
        Command::RdCurve(c) => (c, "rd-curve"),
    };
    let loaded = common.load(name != "covering")?;
    let problem = Problem::resolve(&loaded)?;
    let ctx = Context {
        problem: &problem,
        render: Render {
            units: problem.spec.units.unwrap_or(Units::Nats),
            full_precision: common.full_precision,
        },
        format: problem.spec.format,
    };
    let outcome = match cli.command {
        Command::Exponent(_) => commands::exponent(&ctx)?,
        Command::Sweep(_) => commands::sweep(&ctx)?,
        Command::Attack(_) => commands::attack(&ctx)?,
        Command::Covering(_) => commands::covering(&ctx)?,
        Command::RdCurve(_) => commands::rd_curve(&ctx)?,
    };
    match (&outcome.side_file, &common.out) {
        (Some(file), Some(path)) => {
            emit(Some(path), file)?;
            emit(None, &outcome.text)?;
        }
        _ => emit(common.out.as_deref(), &outcome.text)?,
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) if outcome.converged => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("warning: a solver did not converge at a reported point");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
