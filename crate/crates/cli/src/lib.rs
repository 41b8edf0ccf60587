//! Command-line front end for the Petz-Renyi capacity solver.
//!
//! Six subcommands: `gen` writes channel files, `solve` runs one mirror
//! descent solve and prints JSON, `sweep` runs a grid of Renyi orders to
//! CSV, `trace` dumps per-iteration convergence data, `scale` times solves
//! across problem sizes, and `verify` runs the library's invariant suites.
//!
//! Exit codes: 0 success, 1 invalid input, 2 iteration budget exhausted
//! before the tolerance certificate, 3 verification failure.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod commands;
mod grid;
mod output;

pub use output::{LogBase, SolveOutput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_MAX_ITERS: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "cqcap",
    about = "Petz-Renyi capacity of classical-quantum channels via mirror descent",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a channel file.
    Gen(GenArgs),
    /// Solve one instance and print the result as JSON.
    Solve(SolveArgs),
    /// Solve across a grid of Renyi orders and emit CSV.
    Sweep(SweepArgs),
    /// Emit the per-iteration convergence trace of one solve as CSV.
    Trace(TraceArgs),
    /// Time solves across problem sizes and emit CSV.
    Scale(ScaleArgs),
    /// Run the library's invariant suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ChannelKind {
    Random,
    Noiseless,
    Commuting,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum StepsizeFlag {
    Constant,
    Adaptive,
}

/// `--eta` accepts `auto` or an explicit positive stepsize.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtaFlag(pub Option<f64>);

fn parse_eta(text: &str) -> Result<EtaFlag, String> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(EtaFlag(None));
    }
    let v: f64 = text
        .parse()
        .map_err(|_| format!("expected `auto` or a number, got {text:?}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(EtaFlag(Some(v)))
    } else {
        Err(format!("eta must be positive and finite, got {v}"))
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Channel family to generate.
    #[arg(long, value_enum)]
    kind: ChannelKind,
    /// Alphabet size (random and noiseless kinds).
    #[arg(long)]
    n: Option<usize>,
    /// Output dimension (random kind).
    #[arg(long)]
    d: Option<usize>,
    /// Depolarizing mix-in keeping random states full rank.
    #[arg(long, default_value_t = 1e-2)]
    epsilon: f64,
    /// PRNG seed; identical flags produce identical files.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stochastic rows for the commuting kind, e.g. `0.9,0.1;0.1,0.9`.
    #[arg(long)]
    rows: Option<String>,
    /// Output path; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// Solver knobs shared by solve, sweep, and trace.
#[derive(Debug, Args)]
struct SolverFlags {
    /// Duality-gap stopping tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Iteration budget.
    #[arg(long, default_value_t = 30_000)]
    max_iters: usize,
    /// Simplex floor delta applied after every step.
    #[arg(long, default_value_t = 1e-11)]
    delta: f64,
    /// Floor at which the reported curvature constants are evaluated.
    #[arg(long, default_value_t = 1e-3)]
    analysis_delta: f64,
    /// Stepsize selection.
    #[arg(long, value_enum, default_value_t = StepsizeFlag::Adaptive)]
    stepsize: StepsizeFlag,
    /// Base stepsize: `auto` derives 1/L from the smoothness constant.
    #[arg(long, default_value = "auto", value_parser = parse_eta)]
    eta: EtaFlag,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Channel file to solve.
    #[arg(long)]
    channel: PathBuf,
    /// Renyi order in (0,1).
    #[arg(long)]
    alpha: f64,
    #[command(flatten)]
    solver: SolverFlags,
    /// Base for the reported capacity.
    #[arg(long, value_enum, default_value_t = LogBase::Natural)]
    log_base: LogBase,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Channel file to sweep.
    #[arg(long)]
    channel: PathBuf,
    /// Alpha grid: `start:stop:step` or a comma list.
    #[arg(long, default_value = "0.1:0.9:0.1")]
    alphas: String,
    #[command(flatten)]
    solver: SolverFlags,
    /// Base for the capacity column.
    #[arg(long, value_enum, default_value_t = LogBase::Natural)]
    log_base: LogBase,
    /// Solve the grid points in parallel.
    #[arg(long)]
    parallel: bool,
    /// Worker count for --parallel; defaults to the rayon global pool.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output CSV path; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TraceArgs {
    /// Channel file to trace.
    #[arg(long)]
    channel: PathBuf,
    /// Renyi order in (0,1).
    #[arg(long)]
    alpha: f64,
    #[command(flatten)]
    solver: SolverFlags,
    /// Record every k-th iteration (the first and last always appear).
    #[arg(long, default_value_t = 1)]
    trace_every: usize,
    /// Output CSV path; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScaleArgs {
    /// Renyi order for every timed solve.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Alphabet sizes timed with the dimension fixed at --fixed-d.
    #[arg(long, default_value = "10,20,40,80")]
    n_list: String,
    /// Dimensions timed with the alphabet fixed at --fixed-n.
    #[arg(long, default_value = "4,6,8,10")]
    d_list: String,
    /// Dimension held fixed while the alphabet varies.
    #[arg(long, default_value_t = 6)]
    fixed_d: usize,
    /// Alphabet held fixed while the dimension varies.
    #[arg(long, default_value_t = 10)]
    fixed_n: usize,
    /// Timed repetitions per cell (the median is reported).
    #[arg(long, default_value_t = 2)]
    repeats: usize,
    /// Seed for the first repetition; later repetitions increment it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Depolarizing mix-in for the generated channels.
    #[arg(long, default_value_t = 1e-2)]
    epsilon: f64,
    #[command(flatten)]
    solver: SolverFlags,
    /// Output CSV path; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Seeded instances per sampling suite.
    #[arg(long)]
    seeds: Option<u64>,
    /// Channel shapes for the generator suite, e.g. `10x6,4x3`.
    #[arg(long)]
    sizes: Option<String>,
    /// Optional channel file to put through the spot checks; a file that
    /// fails validation is reported as a failed check.
    #[arg(long)]
    channel: Option<PathBuf>,
}

/// Parses `std::env::args` and runs the selected command, returning the
/// process exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Same as [`run`] but over explicit arguments, for tests.
pub fn run_from<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Clap prints help/version to stdout with success; everything
            // else is an input error.
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Gen(args) => commands::cmd_gen(args),
        Command::Solve(args) => commands::cmd_solve(args),
        Command::Sweep(args) => commands::cmd_sweep(args),
        Command::Trace(args) => commands::cmd_trace(args),
        Command::Scale(args) => commands::cmd_scale(args),
        Command::Verify(args) => commands::cmd_verify(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_INPUT
        }
    }
}
