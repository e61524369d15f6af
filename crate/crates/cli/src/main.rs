//! `shishkin-rd`: validate, mesh, solve and verify singularly perturbed
//! reaction-diffusion systems from the command line.
//!
//! Exit codes: 0 success, 1 a check or validation failed, 2 usage or
//! configuration error.

mod commands;
mod config;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::{Overrides, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or I/O: exit 2.
    Usage(String),
    /// A check or validation failed: exit 1.
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<shishkin_rd::Error> for CliError {
    fn from(e: shishkin_rd::Error) -> Self {
        use shishkin_rd::Error as E;
        match e {
            E::ConditionViolated { .. } | E::NoValidAlpha(_) | E::SingularPivot { .. } => {
                CliError::Failed(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o error: {e}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    Csv,
    #[default]
    Table,
    Gnuplot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    TwoMesh,
}

#[derive(Parser, Debug)]
#[command(
    name = "shishkin-rd",
    version,
    about = "Shishkin-mesh solver for -E u'' + A(x) u = f"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Directory for output files.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Seed for the randomised checks.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,

    /// Run even when max eps_i exceeds alpha/36.
    #[arg(long, global = true)]
    allow_large_epsilon: bool,

    /// Also write the assembled system as system.csv.
    #[arg(long, global = true)]
    debug_dump: bool,

    /// Builtin problem (PCONST, P1, P2, P3); overrides the config.
    #[arg(long, global = true)]
    problem: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the structural conditions on A and epsilon.
    Validate,
    /// Build the Shishkin mesh and report its transition points.
    Mesh {
        /// Number of mesh intervals.
        #[arg(short = 'N', long = "intervals")]
        n: Option<usize>,
    },
    /// Solve the discrete problem.
    Solve {
        #[arg(short = 'N', long = "intervals")]
        n: Option<usize>,
    },
    /// Error and order table over a sequence of N.
    Converge {
        /// Comma separated list of N.
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<usize>>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Replace the solver by the error series N^-2.
        #[arg(long)]
        synthetic: bool,
    },
    /// Convergence over a grid of epsilon vectors and the uniform series.
    Sweep {
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<usize>>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Mesh, maximum principle, stability and intersection-point suites.
    Check,
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("SHISHKIN_RD_THREADS") {
        let k: usize = v.trim().parse().ok().filter(|&k| k > 0).ok_or_else(|| {
            CliError::Usage(format!(
                "SHISHKIN_RD_THREADS must be a positive integer, got '{v}'"
            ))
        })?;
        b = b.num_threads(k);
    }
    b.build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mode = |m: Option<ModeArg>| {
        m.map(|m| match m {
            ModeArg::Exact => shishkin_rd::ErrorMode::Exact,
            ModeArg::TwoMesh => shishkin_rd::ErrorMode::TwoMesh,
        })
    };
    let mut ov = Overrides {
        problem: cli.problem.clone(),
        seed: cli.seed,
        allow_large_epsilon: cli.allow_large_epsilon,
        debug_dump: cli.debug_dump,
        out: cli.out.clone(),
        ..Overrides::default()
    };
    match &cli.command {
        Command::Mesh { n } | Command::Solve { n } => ov.n_intervals = *n,
        Command::Converge { ns, mode: m, .. } | Command::Sweep { ns, mode: m } => {
            ov.ns = ns.clone();
            ov.mode = mode(*m);
        }
        _ => {}
    }
    let cfg = RunConfig::load(cli.config.as_ref(), &ov)?;
    let pool = thread_pool()?;
    let fmt = cli.format;
    pool.install(|| match cli.command {
        Command::Validate => commands::validate(&cfg),
        Command::Mesh { .. } => commands::mesh(&cfg, fmt),
        Command::Solve { .. } => commands::solve(&cfg, fmt),
        Command::Converge { synthetic, .. } => commands::converge(&cfg, fmt, synthetic),
        Command::Sweep { .. } => commands::sweep(&cfg, fmt),
        Command::Check => commands::check(&cfg),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
