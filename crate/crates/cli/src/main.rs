mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

const EXIT_CODES: &str = "\
Exit codes:
   0  success
   2  invalid command line
   3  config parse error (syntax, unknown key, wrong type, schema_version)
   4  i/o error or missing file
   5  invalid configuration value
   6  invalid data (non-finite values, weight overflow)
   7  domain error (hyperbolicity lost, trust region left, bad denominator)
   8  solver error (unstable time step, blow-up)
   9  Nash-Moser iteration did not converge
  10  smoothing schedule overflow
  11  invalid function or nonlinearity specification

On failure a line `tamewave: <category>: <message>` goes to stderr and, when
the output directory is writable, `error.json` records the same fields.";

/// Batch runner for smoothing and tame audits, resonance analysis and
/// linear and quasilinear solves of the toy wave problem.
#[derive(Parser, Debug)]
#[command(name = "tamewave", version, after_help = EXIT_CODES)]
struct Cli {
    /// TOML config merged over the defaults of the subcommand's scenario.
    #[arg(long, global = true, env = "TAMEWAVE_CONFIG")]
    config: Option<PathBuf>,
    /// Directory for reports and fields; created if missing.
    #[arg(long, global = true, env = "TAMEWAVE_OUT", default_value = "out")]
    out: PathBuf,
    /// Random seed; overrides the config's `seed`.
    #[arg(long, global = true, env = "TAMEWAVE_SEED")]
    seed: Option<u64>,
    /// Worker threads for audit sweeps (default: all cores).
    #[arg(long, global = true, env = "TAMEWAVE_JOBS")]
    jobs: Option<usize>,
    /// Log progress to stderr.
    #[arg(long, short, global = true, env = "TAMEWAVE_VERBOSE")]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Gain and remainder estimates of the smoothing operators.
    SmoothingAudit,
    /// Product, reciprocal and composition estimates.
    TameAudit,
    /// Resonances and spectral gap of the frozen operator.
    Resonances,
    /// Frozen linear operator: solution field and per-mode decay rates.
    SolveLinear,
    /// Nash-Moser solve plus expansion, damped wave defaults.
    SolveQuasilinear,
    /// Nash-Moser iteration only: trace and solution field.
    NashMoser,
    /// Nash-Moser solve plus expansion, Klein-Gordon defaults.
    Kg,
}

#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Io(String),
    Core(tamewave_core::Error),
}

impl From<tamewave_core::Error> for CliError {
    fn from(e: tamewave_core::Error) -> Self {
        match e {
            tamewave_core::Error::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::Io(_) => "io",
            CliError::Core(e) => e.category(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.category() {
            "parse" => 3,
            "io" => 4,
            "config" => 5,
            "data" => 6,
            "domain" => 7,
            "solver" => 8,
            "convergence" => 9,
            "schedule" => 10,
            _ => 11,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Parse(m) | CliError::Io(m) => m.clone(),
            CliError::Core(e) => {
                // the category is printed separately
                let text = e.to_string();
                match text.split_once(" error: ") {
                    Some((_, rest)) => rest.to_string(),
                    None => text,
                }
            }
        }
    }
}

pub struct Context {
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("tamewave: config: cannot start {n} worker threads: {e}");
            return ExitCode::from(5);
        }
    }
    let ctx = Context {
        out: cli.out,
        seed: cli.seed,
        config: cli.config,
    };
    match commands::run(cli.command, &ctx) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tamewave: {}: {}", e.category(), e.message());
            output::write_error(&ctx.out, &e);
            ExitCode::from(e.exit_code())
        }
    }
}
