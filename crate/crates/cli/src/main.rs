//! `walkdim`: walk dimensions and Lipschitz invariants of gasket-type
//! self-similar sets.
//!
//! JSON summaries go to stdout; bulk data goes to the `--out` file.
//! Exit codes: 0 success, 1 computation error, 2 usage/parse/missing file.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

/// Command-line failure carrying its exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Core(walkdim_core::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Core(walkdim_core::Error::Parse(_)) => 2,
            CliError::Core(_) => 1,
        }
    }

    fn to_json(&self) -> serde_json::Value {
        let (code, detail) = match self {
            CliError::Usage(d) => ("usage", d.clone()),
            CliError::Io(d) => ("io", d.clone()),
            CliError::Core(e) => (e.code(), e.to_string()),
        };
        json!({ "error": code, "detail": detail })
    }
}

impl From<walkdim_core::Error> for CliError {
    fn from(e: walkdim_core::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "walkdim",
    version,
    about = "Walk dimension and Lipschitz invariants of gasket-type self-similar sets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct RenormArgs {
    /// Power-iteration cap when the uniform network is not a fixed direction.
    #[arg(long, default_value_t = walkdim_core::resistance::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Convergence tolerance for the power iteration.
    #[arg(long, default_value_t = walkdim_core::resistance::DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone)]
pub struct WindowArgs {
    /// Smallest radius (rational).
    #[arg(long, default_value = "1/32")]
    pub rmin: String,
    /// Largest radius (rational, below 1).
    #[arg(long, default_value = "1/2")]
    pub rmax: String,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Structural checks on an IFS.
    Validate {
        /// Preset name, JSON path, or `a*b` for the composition a∘b.
        ifs: String,
    },
    /// Hausdorff dimension, energy scale and walk dimension.
    Dim {
        ifs: String,
        #[command(flatten)]
        renorm: RenormArgs,
    },
    /// Level-m approximation graph.
    Graph {
        ifs: String,
        #[arg(short, default_value_t = 2)]
        m: usize,
        /// Write the full graph JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Energy renormalization factor and fixed network.
    Renorm {
        ifs: String,
        #[command(flatten)]
        renorm: RenormArgs,
    },
    /// Exact harmonic extensions and their scaled energies by level.
    Harmonic {
        ifs: String,
        #[arg(short, default_value_t = 4)]
        m: usize,
        /// Boundary values, e.g. `1,0,0` (default: 1 then zeros).
        #[arg(long)]
        boundary: Option<String>,
        /// Energy scale (default: the computed renormalization factor).
        #[arg(long)]
        scale: Option<String>,
        /// CSV of (m, energy).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact exit times by level and the implied walk dimension.
    ExitFit {
        ifs: String,
        #[arg(short, default_value_t = 4)]
        m: usize,
        /// Boundary index the walk starts from.
        #[arg(long, default_value_t = 0)]
        start: usize,
        /// CSV of (m, expected steps).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// On-diagonal heat-kernel decay of the lazy walk.
    HeatFit {
        ifs: String,
        #[arg(short, default_value_t = 6)]
        m: usize,
        #[arg(long, default_value_t = walkdim_core::dirichlet::DEFAULT_LAZINESS)]
        laziness: f64,
        #[arg(long, default_value_t = 10)]
        tmin: usize,
        #[arg(long, default_value_t = 1000)]
        tmax: usize,
        /// Number of log-spaced times.
        #[arg(long, default_value_t = 25)]
        points: usize,
        /// CSV of (t, p_t).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Besov critical exponent from the slope of the pair energy.
    BesovFit {
        ifs: String,
        #[arg(short, default_value_t = 7)]
        m: usize,
        #[arg(long)]
        boundary: Option<String>,
        /// Use a coordinate function (`x` or `y`) instead of the harmonic one.
        #[arg(long)]
        coordinate: Option<String>,
        #[command(flatten)]
        window: WindowArgs,
        /// Normalize by r^α instead of the empirical ball volume.
        #[arg(long)]
        analytic_volume: bool,
        /// CSV of (r, E_tilde, V_min_ratio, V_max_ratio).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Besov pair energies before and after an affine map x ↦ s·x + t.
    Pushforward {
        ifs: String,
        #[arg(short, default_value_t = 7)]
        m: usize,
        #[arg(long)]
        boundary: Option<String>,
        #[arg(long, default_value = "1/2")]
        scale: String,
        /// Translation `tx,ty`.
        #[arg(long, default_value = "0,0")]
        translate: String,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Empirical volume ratios V(x,r)/r^α of a Monte Carlo measure sample.
    Alfors {
        ifs: String,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Word length (default: resolution 2^-10).
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Exponent to test (default: the Hausdorff dimension).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        centers: usize,
        #[arg(long, default_value = "1/64")]
        rmin: String,
        #[arg(long, default_value = "1/2")]
        rmax: String,
        /// CSV of (r, min_ratio, median_ratio, max_ratio).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Connected components of the level-m graph after deleting vertices.
    Cut {
        ifs: String,
        #[arg(short, default_value_t = 1)]
        m: usize,
        /// Vertex `x,y` to delete (repeatable).
        #[arg(long = "remove")]
        remove: Vec<String>,
    },
    /// Exact comparison of (α, β) for two or more sets.
    Compare {
        /// IFS arguments (presets, paths or compositions).
        ifs: Vec<String>,
        /// Declared constants `N,rho,lambda` (repeatable).
        #[arg(long = "constants")]
        constants: Vec<String>,
        #[command(flatten)]
        renorm: RenormArgs,
    },
}

/// Writes pretty JSON to stdout; a closed pipe is not an error.
fn emit(value: &serde_json::Value) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value).expect("json");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let err = CliError::Usage(e.to_string().trim().to_string());
            emit(&err.to_json());
            return ExitCode::from(err.exit_code());
        }
    };
    match commands::run(&cli.command) {
        Ok(value) => {
            emit(&value);
            ExitCode::SUCCESS
        }
        Err(err) => {
            emit(&err.to_json());
            ExitCode::from(err.exit_code())
        }
    }
}
