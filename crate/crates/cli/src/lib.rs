//! Command-line front end: JSON model files in, JSON reports out.

pub mod commands;
pub mod error;
pub mod model_file;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{GenKind, Inputs, LimitOptions};
pub use crate::error::{CliError, CliResult};
use crate::report::Report;

fn parse_tol(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("tolerance must lie in (0, 1), got {v}"))
    }
}

fn parse_times(s: &str) -> Result<Vec<f64>, String> {
    let v = commands::parse_list(s)?;
    if v.is_empty() {
        return Err("empty time list".into());
    }
    Ok(v)
}

#[derive(Debug, Parser)]
#[command(name = "qmsep", version, about = "Entropy production and detailed balance for GKSL generators")]
pub struct Cli {
    /// Relative numerical tolerance.
    #[arg(long, global = true, env = "QMSEP_TOL", default_value_t = qmsep::DEFAULT_TOL, value_parser = parse_tol)]
    pub tol: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model file (JSON).
    pub model: PathBuf,
    /// State file: a matrix object or a model file with `rho`.
    #[arg(long)]
    pub rho: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a model and check shapes, Hermiticity and special form.
    Validate(ModelArgs),
    /// List invariant states.
    Invariant {
        model: PathBuf,
    },
    /// Entropy production.
    Ep {
        #[command(flatten)]
        args: ModelArgs,
        /// Comma-separated times for the S(t)/t estimate.
        #[arg(long, value_parser = parse_times)]
        limit_check: Option<::std::vec::Vec<f64>>,
        /// Write the limit-check rows as CSV (t,S,S_over_t).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Standard detailed balance, with and without time reversal, and the derivation gap.
    Balance(ModelArgs),
    /// Support conditions.
    Support(ModelArgs),
    /// Write a bundled model to a file.
    Gen {
        #[command(subcommand)]
        kind: GenCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Nearest-neighbour jumps on a ring of n sites.
    Cycle {
        /// Number of sites, at least 3.
        #[arg(long)]
        n: usize,
        /// Rate of the jump j -> j+1.
        #[arg(long)]
        lambda: f64,
        /// Rate of the jump j+1 -> j.
        #[arg(long)]
        mu: f64,
        /// Diagonal of H, comma-separated.
        #[arg(long, value_parser = commands::parse_list)]
        h: Option<::std::vec::Vec<f64>>,
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Classical chain embedded with jumps sqrt(gamma_lm) |e_m><e_l|.
    Generic {
        /// Rate matrix, rows separated by ';', entries by ','.
        #[arg(long, value_parser = commands::parse_rows)]
        rates: ::std::vec::Vec<Vec<f64>>,
        /// Diagonal of H, comma-separated.
        #[arg(long, value_parser = commands::parse_list)]
        h: Option<::std::vec::Vec<f64>>,
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Two-level counterexample with coupling kappa.
    Twolevel {
        #[arg(long, allow_negative_numbers = true)]
        kappa: f64,
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
    },
}

fn inputs(args: &ModelArgs, tol: f64) -> Inputs {
    Inputs { model: args.model.clone(), rho: args.rho.clone(), tol }
}

pub fn run(cli: &Cli) -> CliResult<Report> {
    let tol = cli.tol;
    match &cli.command {
        Command::Validate(a) => commands::cmd_validate(&inputs(a, tol)),
        Command::Invariant { model } => commands::cmd_invariant(&Inputs { model: model.clone(), rho: None, tol }),
        Command::Ep { args, limit_check, csv } => commands::cmd_ep(
            &inputs(args, tol),
            &LimitOptions { times: limit_check.clone(), csv: csv.clone() },
        ),
        Command::Balance(a) => commands::cmd_balance(&inputs(a, tol)),
        Command::Support(a) => commands::cmd_support(&inputs(a, tol)),
        Command::Gen { kind } => {
            let (kind, out) = match kind {
                GenCommand::Cycle { n, lambda, mu, h, out } => {
                    (GenKind::Cycle { n: *n, lambda: *lambda, mu: *mu, h: h.clone() }, out)
                }
                GenCommand::Generic { rates, h, out } => (GenKind::Generic { rates: rates.clone(), h: h.clone() }, out),
                GenCommand::Twolevel { kappa, out } => (GenKind::TwoLevel { kappa: *kappa }, out),
            };
            commands::cmd_gen(&kind, out, tol)
        }
    }
}
