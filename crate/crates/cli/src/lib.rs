//! Command-line front end for `epsicomp`.
//!
//! Five commands: `class` (exact class complexity), `estimate` (empirical
//! coefficients of a series), `gen` (synthetic series), `segment` (change
//! detection on coefficient tracks) and `converge` (discrete complexity
//! along grid refinements). Files written under `--out` always include a
//! `manifest.json` that pins the configuration, seeds and input digest.

use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use epsicomp::coefficient_estimation::{default_fractions, SelectionMode};
use epsicomp::{ApproximationMethod, ErrorNorm, GeneratorKind, GeneratorSpec, SweepConfig};
use thiserror::Error;

mod commands;
pub mod input;
pub mod manifest;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data: {0}")]
    Data(String),
    #[error("numeric: {0}")]
    Numeric(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// 2 usage, 3 data and I/O, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) | CliError::Io { .. } => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<epsicomp::Error> for CliError {
    fn from(e: epsicomp::Error) -> Self {
        use epsicomp::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidNorm(_)
            | E::InvalidModulus(_)
            | E::InvalidClass(_)
            | E::InvalidMethod(_)
            | E::InvalidArgument(_)
            | E::InvalidConfig(_)
            | E::InvalidSpec(_)
            | E::InvalidWindow(_)
            | E::UnsupportedDimension { .. } => CliError::Usage(msg),
            E::InvalidFunction(_)
            | E::ZeroFunction
            | E::NotNormalized
            | E::LengthMismatch { .. }
            | E::InvalidSelection(_)
            | E::StrideTooLarge { .. }
            | E::NonTensorSubgrid
            | E::TooFewKept { .. }
            | E::OrderTooHigh { .. }
            | E::SeriesTooShort { .. }
            | E::TooFewWindows { .. } => CliError::Data(msg),
            E::OutOfRange { .. }
            | E::NotAttained { .. }
            | E::ErrorTooLarge { .. }
            | E::NotHolder
            | E::TooFewPoints { .. }
            | E::AllMethodsFailed
            | E::DiscreteUndefined
            | E::InsufficientRows { .. } => CliError::Numeric(msg),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "epsicomp", version, about = "ε-complexity of sampled functions")]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "EPSICOMP_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact complexity of a Hölder class and its (A, B) coefficients.
    Class(ClassArgs),
    /// Recovery-error curve and coefficients (A, B) of a series.
    Estimate(EstimateArgs),
    /// Write a synthetic series.
    Gen(GenArgs),
    /// Sliding-window coefficient tracks and change points.
    Segment(SegmentArgs),
    /// Gap between S_N(ε) and the finest-grid S(ε) along refinements.
    Converge(ConvergeArgs),
}

#[derive(Debug, Args)]
pub struct ClassArgs {
    #[arg(long = "holder-L")]
    pub holder_l: f64,
    #[arg(long = "holder-p")]
    pub holder_p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps_list: Vec<f64>,
    /// Cross-check each row against the brute-force cell oracle.
    #[arg(long)]
    pub oracle: bool,
    /// Lattice points per axis for the oracle (default depends on --dim).
    #[arg(long)]
    pub oracle_resolution: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectionArg {
    Stratified,
    Uniform,
    Nested,
}

impl From<SelectionArg> for SelectionMode {
    fn from(s: SelectionArg) -> Self {
        match s {
            SelectionArg::Stratified => SelectionMode::Stratified,
            SelectionArg::Uniform => SelectionMode::Uniform,
            SelectionArg::Nested => SelectionMode::Nested,
        }
    }
}

fn parse_norm(s: &str) -> Result<ErrorNorm, String> {
    let norm = match s.trim() {
        "uniform" | "max" | "C" => ErrorNorm::Uniform,
        other => {
            let q = other
                .strip_prefix("power:")
                .or_else(|| other.strip_prefix("L"))
                .and_then(|q| q.parse::<f64>().ok())
                .ok_or_else(|| format!("unknown norm '{other}' (use 'uniform' or 'power:Q')"))?;
            ErrorNorm::MeanPower(q)
        }
    };
    norm.validate().map_err(|e| e.to_string())?;
    Ok(norm)
}

fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok((
            a.parse().map_err(|_| format!("bad interval bound '{a}'"))?,
            b.parse().map_err(|_| format!("bad interval bound '{b}'"))?,
        )),
        _ => Err(format!("expected 'alpha,beta', got '{s}'")),
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub schemes: usize,
    /// Retained fractions (default 0.05, 0.10, ..., 0.95).
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_interval, default_value = "0.2,0.8")]
    pub fit_interval: (f64, f64),
    /// Comma list of nearest, linear, spline, polyN.
    #[arg(long, value_delimiter = ',')]
    pub family: Option<Vec<ApproximationMethod>>,
    /// `uniform` or `power:Q` (mean power norm, Q >= 1).
    #[arg(long, value_parser = parse_norm, default_value = "uniform")]
    pub norm: ErrorNorm,
    #[arg(long, value_enum, default_value_t = SelectionArg::Stratified)]
    pub selection: SelectionArg,
}

impl SweepArgs {
    pub fn config(&self, difference_orders: usize) -> SweepConfig {
        SweepConfig {
            fractions: self.fractions.clone().unwrap_or_else(default_fractions),
            fit_interval: self.fit_interval,
            schemes_per_fraction: self.schemes,
            rng_seed: self.seed,
            family: self.family.clone().unwrap_or_else(ApproximationMethod::default_family),
            norm: self.norm,
            difference_orders,
            selection: self.selection.into(),
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// CSV file, or `-` / nothing for standard input.
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// Also estimate the forward-difference series up to this order.
    #[arg(long, default_value_t = 0)]
    pub diff_orders: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Affine,
    Polynomial,
    Sine,
    Weierstrass,
    Fbm,
    Logistic,
}

#[derive(Debug, Args)]
pub struct GeneratorArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Affine slope (default 1) or Weierstrass amplitude ratio (default 0.5).
    #[arg(long)]
    pub a: Option<f64>,
    /// Affine offset (default 0) or Weierstrass integer frequency base (default 3).
    #[arg(long)]
    pub b: Option<f64>,
    /// Weierstrass terms (default: enough for a 1e-12 tail).
    #[arg(long)]
    pub terms: Option<u32>,
    #[arg(long, default_value_t = 0.5)]
    pub hurst: f64,
    /// Seed of the fBm path.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub freq: f64,
    /// Polynomial coefficients, lowest order first.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub coeffs: Option<Vec<f64>>,
    #[arg(long, default_value_t = 4.0)]
    pub r: f64,
    #[arg(long, default_value_t = 0.3)]
    pub x0: f64,
}

impl GeneratorArgs {
    pub fn kind(&self) -> Result<GeneratorKind, CliError> {
        Ok(match self.kind {
            KindArg::Affine => GeneratorKind::Affine {
                a: self.a.unwrap_or(1.0),
                b: self.b.unwrap_or(0.0),
            },
            KindArg::Polynomial => GeneratorKind::Polynomial {
                coeffs: self
                    .coeffs
                    .clone()
                    .ok_or_else(|| CliError::Usage("--kind polynomial needs --coeffs".into()))?,
            },
            KindArg::Sine => GeneratorKind::Sine { freq: self.freq },
            KindArg::Weierstrass => {
                let a = self.a.unwrap_or(0.5);
                let b = self.b.unwrap_or(3.0);
                if !(b >= 2.0 && b.fract() == 0.0 && b <= u32::MAX as f64) {
                    return Err(CliError::Usage(format!(
                        "Weierstrass --b must be an integer >= 2, got {b}"
                    )));
                }
                let terms = match self.terms {
                    Some(t) => t,
                    None if a > 0.0 && a < 1.0 => GeneratorSpec::weierstrass_min_terms(a),
                    None => return Err(CliError::Usage(format!("Weierstrass --a must lie in (0, 1), got {a}"))),
                };
                GeneratorKind::Weierstrass { a, b: b as u64, terms }
            }
            KindArg::Fbm => GeneratorKind::FbmMidpoint {
                hurst: self.hurst,
                seed: self.seed,
            },
            KindArg::Logistic => GeneratorKind::LogisticMap { r: self.r, x0: self.x0 },
        })
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long)]
    pub n: usize,
    /// Directory for `series.csv` and `manifest.json`; standard output otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// CSV file, or `-` / nothing for standard input.
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, default_value_t = 1000)]
    pub window: usize,
    #[arg(long, default_value_t = 250)]
    pub hop: usize,
    #[arg(long, default_value_t = 1.5)]
    pub threshold: f64,
    /// Minimum distance between change points (default: the window length).
    #[arg(long)]
    pub min_separation: Option<usize>,
    #[arg(long, default_value_t = 199)]
    pub permutations: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub family: Option<Vec<ApproximationMethod>>,
    #[arg(long, value_parser = parse_norm, default_value = "uniform")]
    pub norm: ErrorNorm,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command line. Tables go to `stdout`; files go under `--out`.
pub fn run(cli: Cli, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Result<(), CliError> {
    let pool = match cli.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?,
        ),
        None => None,
    };
    let text = commands::dispatch(cli.command, pool.as_ref(), stdin)?;
    match stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
        // a closed reader (`| head`) is not a failure
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other.map_err(|e| CliError::io("writing standard output", e)),
    }
}

/// Parses `args` (program name first) and runs them.
pub fn run_from<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    run(cli, stdin, stdout)
}
