//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when the inputs violate a mathematical
//! precondition (or a decay check fails), 2 on malformed invocations.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{check_decay, check_lipschitz_capped};
use crate::cdf::cdf_table_capped;
use crate::error::Error;
use crate::fast::{fast_moments, mgf_eval, shifted_fast_moments};
use crate::legendre::{monic_basis_general, monic_basis_symmetric};
use crate::moments::{exact_moments, shifted_moments};
use crate::weights::{DepthCap, WeightVector};

#[derive(Debug, Parser)]
#[command(name = "cantor", version, about = "Moments, CDFs and orthogonal polynomials of weighted Cantor measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Raw moments I_0..=I_m
    Moments(MomentArgs),
    /// Moments J_0..=J_m of the measure translated to [-1/2, 1/2]
    ShiftedMoments(MomentArgs),
    /// CDF samples on the depth-k grid
    Cdf(CdfArgs),
    /// Monic orthogonal polynomials (JSON) or normalized plot data (CSV)
    Legendre(LegendreArgs),
    /// Depth-k partial product of the moment generating function at s
    Mgf(MgfArgs),
    /// Moment decay checks
    Decay(DecayArgs),
    /// CDF distance between two weight vectors against the Lipschitz bound
    Lipschitz(LipschitzArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Fast,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Symmetric,
    General,
}

#[derive(Debug, Args)]
struct Common {
    /// Comma-separated weights, e.g. 1/2,0,1/2
    #[arg(long)]
    weights: String,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write here instead of standard output
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MomentArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    m: usize,
    #[arg(long, value_enum, default_value = "exact")]
    mode: Mode,
    /// Absolute tolerance, required with --mode fast
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Debug, Args)]
struct CdfArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    depth: u32,
}

#[derive(Debug, Args)]
struct LegendreArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    degree: usize,
    #[arg(long, value_enum, default_value = "general")]
    method: Method,
    /// Grid intervals for CSV plot data
    #[arg(long, default_value_t = 200)]
    grid: usize,
}

#[derive(Debug, Args)]
struct MgfArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_negative_numbers = true)]
    s: f64,
    #[arg(long)]
    k: u32,
}

#[derive(Debug, Args)]
struct DecayArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 64)]
    m: usize,
}

#[derive(Debug, Args)]
struct LipschitzArgs {
    #[command(flatten)]
    common: Common,
    /// Second weight vector, same length as --weights
    #[arg(long)]
    weights_b: String,
    #[arg(long)]
    depth: u32,
}

/// Output of `mgf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgfValue {
    pub s: f64,
    pub k: u32,
    pub value: f64,
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) => Failure::Usage(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(rendered.as_bytes());
            } else {
                let _ = err.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "usage error: {msg}");
            2
        }
        Err(Failure::Domain(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

fn weights(s: &str) -> Result<WeightVector, Failure> {
    Ok(s.parse()?)
}

fn emit(common: &Common, csv: impl FnOnce() -> Result<String, Error>, json: impl FnOnce() -> String, out: &mut dyn Write) -> Result<(), Failure> {
    let text = match common.format {
        Format::Csv => csv()?,
        Format::Json => {
            let mut s = json();
            s.push('\n');
            s
        }
    };
    let written = match &common.output {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    written.map_err(Failure::Domain)
}

fn require_eps(eps: Option<f64>) -> Result<f64, Failure> {
    eps.ok_or_else(|| Failure::Usage("--mode fast requires --eps".into()))
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Moments(a) => {
            let w = weights(&a.common.weights)?;
            match a.mode {
                Mode::Exact => {
                    let seq = exact_moments(&w, a.m);
                    emit(&a.common, || Ok(seq.to_csv()), || seq.to_json(), out)?;
                }
                Mode::Fast => {
                    let r = fast_moments(&w, a.m, require_eps(a.eps)?)?;
                    emit(&a.common, || Ok(r.to_csv()), || r.to_json(), out)?;
                }
            }
        }
        Command::ShiftedMoments(a) => {
            let w = weights(&a.common.weights)?;
            match a.mode {
                Mode::Exact => {
                    if !w.is_palindromic() {
                        return Err(Error::NotPalindromic.into());
                    }
                    let seq = shifted_moments(&exact_moments(&w, a.m))?;
                    emit(&a.common, || Ok(seq.to_csv()), || seq.to_json(), out)?;
                }
                Mode::Fast => {
                    let r = shifted_fast_moments(&w, a.m, require_eps(a.eps)?)?;
                    emit(&a.common, || Ok(r.to_csv()), || r.to_json(), out)?;
                }
            }
        }
        Command::Cdf(a) => {
            let w = weights(&a.common.weights)?;
            let table = cdf_table_capped(&w, a.depth, DepthCap::from_env()?)?;
            emit(&a.common, || Ok(table.to_csv()), || table.to_json(), out)?;
        }
        Command::Legendre(a) => {
            let w = weights(&a.common.weights)?;
            let moments = exact_moments(&w, 2 * a.degree);
            let basis = match a.method {
                Method::Symmetric => monic_basis_symmetric(&w, a.degree, &moments)?,
                Method::General => monic_basis_general(a.degree, &moments)?,
            };
            emit(&a.common, || basis.plot_csv(a.grid), || basis.to_json(), out)?;
        }
        Command::Mgf(a) => {
            let w = weights(&a.common.weights)?;
            let v = MgfValue {
                s: a.s,
                k: a.k,
                value: mgf_eval(&w, a.s, a.k),
            };
            emit(
                &a.common,
                || Ok(format!("s,k,value\n{:.16e},{},{:.16e}\n", v.s, v.k, v.value)),
                || serde_json::to_string(&v).expect("serializable"),
                out,
            )?;
        }
        Command::Decay(a) => {
            let w = weights(&a.common.weights)?;
            let report = check_decay(&w, &exact_moments(&w, a.m))?;
            emit(&a.common, || Ok(report.to_table()), || report.to_json(), out)?;
            if !report.passed() {
                return Ok(1);
            }
        }
        Command::Lipschitz(a) => {
            let wa = weights(&a.common.weights)?;
            let wb = weights(&a.weights_b)?;
            let r = check_lipschitz_capped(&wa, &wb, a.depth, DepthCap::from_env()?)?;
            emit(
                &a.common,
                || {
                    Ok(format!(
                        "distance,bound,ok\n{},{},{}\n",
                        crate::rational::format(&r.distance),
                        crate::rational::format(&r.bound),
                        r.ok
                    ))
                },
                || serde_json::to_string(&r).expect("serializable"),
                out,
            )?;
            if !r.ok {
                return Ok(1);
            }
        }
    }
    Ok(0)
}
