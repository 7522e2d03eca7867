//! `soefrac <kernel|run|convergence|compare> [flags]`
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on numerical, module or
//! I/O errors.

mod cache;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Module(#[from] soefrac::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Module(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "soefrac",
    version,
    about = "Sum-of-exponentials kernels and modal schemes for fractional evolution equations"
)]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a kernel, write its JSON and print its error summary.
    Kernel(KernelCmd),
    /// Run one problem and write the per-step record as CSV.
    Run(RunCmd),
    /// Measure E_r over a range of step sizes and fit the order.
    Convergence(ConvergenceCmd),
    /// Compare a scalar run against the direct-quadrature oracle.
    Compare(CompareCmd),
}

#[derive(Args)]
struct Common {
    /// Flat key = value file; command-line flags take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KernelParams {
    /// Fractional order in [0, 1].
    #[arg(long)]
    alpha: f64,
    /// AAA tolerance [default: 1e-12 for kernel and CH, 1e-13 otherwise].
    #[arg(long)]
    tol: Option<f64>,
    /// Number of log-spaced AAA samples.
    #[arg(long, default_value_t = soefrac::kernel::DEFAULT_SAMPLES)]
    n_samples: usize,
}

#[derive(Args)]
struct CacheParams {
    /// Kernel cache directory [default: $SOEFRAC_CACHE_DIR, else <tmp>/soefrac-kernels].
    #[arg(long, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Always build kernels afresh and store nothing.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProblemKind {
    Scalar,
    Heat1d,
    Ch2d,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeKind {
    Theta,
    Ie,
    Mcn,
}

#[derive(Args)]
struct ProblemParams {
    #[arg(long, value_enum)]
    problem: ProblemKind,
    /// Scalar rate λ in u' = λu.
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    lambda: f64,
    /// Interior points of the heat grid.
    #[arg(long, default_value_t = 1000)]
    n_cells: usize,
    /// Cahn-Hilliard grid.
    #[arg(long, default_value_t = 64)]
    nx: usize,
    #[arg(long, default_value_t = 64)]
    ny: usize,
    /// Cahn-Hilliard mobility.
    #[arg(long = "M", default_value_t = 0.05)]
    mobility: f64,
    /// Cahn-Hilliard interface width.
    #[arg(long, default_value_t = 0.03)]
    eps: f64,
}

#[derive(Args)]
struct SchemeParams {
    #[arg(long, value_enum, default_value = "mcn")]
    scheme: SchemeKind,
    /// Implicitness of the theta scheme; required iff --scheme theta.
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Args)]
struct KernelCmd {
    #[command(flatten)]
    kernel: KernelParams,
    /// Smallest resolved time h.
    #[arg(long)]
    h: f64,
    /// Horizon.
    #[arg(long = "T", default_value_t = 1.0)]
    t_end: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct RunCmd {
    #[command(flatten)]
    problem: ProblemParams,
    #[command(flatten)]
    scheme: SchemeParams,
    #[command(flatten)]
    kernel: KernelParams,
    /// Time step.
    #[arg(long)]
    h: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    t_end: f64,
    /// Times at which CH fields are written [default: T].
    #[arg(long, value_delimiter = ',')]
    snapshot_times: Vec<f64>,
    /// Directory for CH field snapshots [default: beside --out].
    #[arg(long, value_name = "DIR")]
    snapshot_dir: Option<PathBuf>,
    #[command(flatten)]
    cache: CacheParams,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ConvergenceCmd {
    #[command(flatten)]
    problem: ProblemParams,
    #[command(flatten)]
    scheme: SchemeParams,
    #[command(flatten)]
    kernel: KernelParams,
    /// Finest step is 2^-e.
    #[arg(long, default_value_t = 12)]
    h_min_exp: i32,
    /// Coarsest step is 2^-e.
    #[arg(long, default_value_t = 6)]
    h_max_exp: i32,
    #[arg(long = "T", default_value_t = 1.0)]
    t_end: f64,
    /// Measure heat errors against the semi-discrete solution.
    #[arg(long)]
    discrete_reference: bool,
    #[command(flatten)]
    cache: CacheParams,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CompareCmd {
    #[command(flatten)]
    scheme: SchemeParams,
    #[command(flatten)]
    kernel: KernelParams,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long)]
    h: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    t_end: f64,
    #[command(flatten)]
    cache: CacheParams,
    #[command(flatten)]
    common: Common,
}

fn configure_threads() -> Result<(), Failure> {
    let Some(v) = std::env::var_os("SOEFRAC_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .to_str()
        .and_then(|s| s.trim().parse().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Failure::Usage(format!(
                "SOEFRAC_THREADS must be a positive integer, got {v:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot size the thread pool: {e}")))
}

fn dispatch(argv: Vec<String>) -> Result<(), Failure> {
    let argv = config::expand(argv)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                Err(Failure::Usage(String::new()))
            } else {
                Ok(())
            };
        }
    };
    configure_threads()?;
    match cli.command {
        Command::Kernel(c) => commands::kernel(c),
        Command::Run(c) => commands::run(c),
        Command::Convergence(c) => commands::convergence(c),
        Command::Compare(c) => commands::compare(c),
    }
}

fn main() -> ExitCode {
    match dispatch(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            // clap has already reported its own errors
            if !matches!(&f, Failure::Usage(m) if m.is_empty()) {
                eprintln!("soefrac: {f}");
            }
            ExitCode::from(f.exit_code())
        }
    }
}
