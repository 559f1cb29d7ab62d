//! Command-line front end: `curvature`, `verify`, `flow` and `hodge`.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 input error, 3 geometry
//! error, 4 flow abort.

pub mod commands;
pub mod spec;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_GEOMETRY: i32 = 3;
pub const EXIT_FLOW_ABORT: i32 = 4;

/// Failure carrying its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn geometry(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_GEOMETRY,
            message: message.into(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sigmaflow",
    version,
    about = "σ_k-curvature, quotient soliton and flow toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Curvature tensors and σ_k profile at a point.
    Curvature(CurvatureArgs),
    /// Checks the quotient soliton equation on quasi-random probes.
    Verify(VerifyArgs),
    /// Integrates the rotationally symmetric quotient flow on S^n.
    Flow(FlowArgs),
    /// Helmholtz-Hodge decomposition of a field on a flat torus.
    Hodge(HodgeArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Metric-spec JSON file.
    #[arg(long, value_name = "FILE")]
    pub spec: Option<PathBuf>,
    /// Built-in model, e.g. `sphere:4` or `warped:sphere:3:cosh(x1)`.
    #[arg(long, value_name = "NAME")]
    pub builtin: Option<String>,
}

#[derive(Debug, Args)]
pub struct CurvatureArgs {
    #[command(flatten)]
    pub source: Source,
    /// Comma-separated coordinates; defaults to the center of the domain.
    #[arg(long, value_name = "X", allow_hyphen_values = true)]
    pub point: Option<String>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, default_value_t = 64)]
    pub probes: usize,
    #[arg(long, default_value_t = sigmaflow::soliton::TRIVIAL_TOLERANCE)]
    pub tolerance: f64,
    #[arg(long, default_value_t = sigmaflow::soliton::DEFAULT_SEED)]
    pub seed: u64,
    /// Replaces the soliton function λ.
    #[arg(long, value_name = "EXPR", allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// Also reports the structural identities of gradient solitons.
    #[arg(long)]
    pub lemma: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub l: usize,
    /// Number of θ intervals.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Initial conformal factor as an expression in `x1 = θ`.
    #[arg(
        long,
        value_name = "EXPR",
        default_value = "0",
        allow_hyphen_values = true
    )]
    pub u0: String,
    #[arg(long = "t-end", default_value_t = 1.0)]
    pub t_end: f64,
    /// Diagnostic sampling interval; defaults to `t_end / 20`.
    #[arg(long)]
    pub cadence: Option<f64>,
    /// Adaptive step safety factor.
    #[arg(long = "dt-factor", default_value_t = 0.5, conflicts_with = "dt")]
    pub dt_factor: f64,
    /// Fixed time step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// CSV destination; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// Final-state JSON destination.
    #[arg(long, value_name = "PATH")]
    pub state: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HodgeArgs {
    /// Torus dimension (2 or 3).
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub grid: usize,
    /// Comma-separated component expressions in `x1..xn`.
    #[arg(long, value_name = "EXPRS", allow_hyphen_values = true)]
    pub field: String,
    #[arg(long)]
    pub json: bool,
}

/// Worker count from `SIGMAFLOW_THREADS` (0 or unset = automatic).
fn thread_pool() -> Result<rayon::ThreadPool, Failure> {
    let threads = match std::env::var("SIGMAFLOW_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            Failure::input(format!(
                "SIGMAFLOW_THREADS must be a non-negative integer, got '{v}'"
            ))
        })?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::input(format!("cannot start worker pool: {e}")))
}

/// Runs the CLI with explicit output streams and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    // commands write into buffers so the work can move onto the pool
    let (mut out_buf, mut err_buf) = (Vec::new(), Vec::new());
    let result = thread_pool().and_then(|pool| {
        pool.install(|| {
            let (o, e): (&mut dyn Write, &mut dyn Write) = (&mut out_buf, &mut err_buf);
            match &cli.command {
                Command::Curvature(a) => commands::curvature(a, o, e),
                Command::Verify(a) => commands::verify(a, o, e),
                Command::Flow(a) => commands::flow(a, o, e),
                Command::Hodge(a) => commands::hodge(a, o, e),
            }
        })
    });
    let _ = out.write_all(&out_buf);
    let _ = err.write_all(&err_buf);
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
