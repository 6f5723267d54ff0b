mod commands;
mod report;
mod verify;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hartogs::bergman::TruncationPolicy;
use hartogs::domain::{DomainParams, C64};
use hartogs::error::Error;
use hartogs::oracle::McConfig;

use report::{Format, Table};

/// Geometry and weighted Bergman kernels of Fock-Bargmann-Hartogs domains.
#[derive(Debug, Parser)]
#[command(name = "hartogs", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Base dimension.
    #[arg(short = 'n', global = true, default_value_t = 1)]
    n: usize,
    /// Fiber dimension.
    #[arg(short = 'm', global = true, default_value_t = 1)]
    m: usize,
    #[arg(long, global = true, allow_negative_numbers = true, default_value_t = 1.0)]
    mu: f64,
    /// Potential parameter, greater than -1.
    #[arg(long, global = true, allow_negative_numbers = true, default_value_t = 0.0)]
    nu: f64,
    /// Weight of the Bergman space; must exceed m + n.
    #[arg(long, global = true, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, global = true, default_value_t = 2000)]
    max_degree: usize,
    /// Relative tolerance on the certified series tail.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tail_tol: f64,
    /// Monte Carlo sample count; scientific notation such as 1e6 is accepted.
    #[arg(long, global = true, default_value = "1e5", value_parser = parse_count)]
    samples: u64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide whether alpha times the metric is balanced.
    CheckBalanced,
    /// Tabulate the epsilon function over values of |w~|^2.
    EpsilonGrid {
        /// Comma-separated |w~|^2 values in [0, 0.95].
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
        grid: Vec<f64>,
    },
    /// Squared norm of the monomial z^p w^q.
    Norm {
        /// Comma-separated exponents of z (length n).
        #[arg(short = 'p', value_delimiter = ',', required = true)]
        p: Vec<u32>,
        /// Comma-separated exponents of w (length m).
        #[arg(short = 'q', value_delimiter = ',', required = true)]
        q: Vec<u32>,
        /// Cross-check against the Monte Carlo oracle.
        #[arg(long)]
        oracle: bool,
    },
    /// Determinant of the metric at a point.
    Det {
        #[command(flatten)]
        point: PointArgs,
    },
    /// Bergman kernel on the diagonal at a point.
    Kernel {
        #[command(flatten)]
        point: PointArgs,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
    },
    /// Compare closed-form monomial norms with the Monte Carlo oracle.
    OracleCompare {
        /// Largest total degree of p and of q to compare.
        #[arg(long, default_value_t = 1)]
        degree: u32,
    },
}

#[derive(Debug, Clone, Args)]
pub struct PointArgs {
    /// Comma-separated complex z coordinates, e.g. 0.1+0.2i,0.3.
    #[arg(long, value_delimiter = ',', value_parser = parse_complex, allow_hyphen_values = true)]
    z: Vec<C64>,
    /// Comma-separated complex w coordinates.
    #[arg(long, value_delimiter = ',', value_parser = parse_complex, allow_hyphen_values = true, conflicts_with = "w_tilde_sq")]
    w: Vec<C64>,
    /// Place w~ along the first axis with this squared norm.
    #[arg(long, allow_negative_numbers = true)]
    w_tilde_sq: Option<f64>,
    /// Use z = 0, w = 0.
    #[arg(long, conflicts_with_all = ["z", "w", "w_tilde_sq"])]
    at_origin: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Invariance,
    Psi,
    Oracle,
    Identity,
    All,
}

/// Validated run configuration shared by all commands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: DomainParams,
    pub alpha: Option<f64>,
    pub truncation: TruncationPolicy,
    pub mc: McConfig,
}

impl RunConfig {
    pub fn alpha(&self) -> Result<f64, Failure> {
        self.alpha.ok_or_else(|| Failure::Usage("--alpha is required for this command".into()))
    }
}

/// Why a command did not succeed, mapped to the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Exit code 2.
    Usage(String),
    /// Exit code 1, after the report has been written.
    Verification(Table),
    /// Exit code 1.
    Computation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::TruncationExhausted { .. } => Failure::Computation(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn parse_count(s: &str) -> Result<u64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if v < 1.0 || v.fract() != 0.0 || v > 1e15 {
        return Err(format!("expected a positive integer, got {s}"));
    }
    Ok(v as u64)
}

fn parse_complex(s: &str) -> Result<C64, String> {
    s.trim().parse::<C64>().map_err(|_| format!("not a complex number: {s}"))
}

fn config(common: &Common) -> Result<RunConfig, Failure> {
    Ok(RunConfig {
        params: DomainParams::new(common.n, common.m, common.mu, common.nu)?,
        alpha: common.alpha,
        truncation: TruncationPolicy::new(common.max_degree, common.tail_tol)?,
        mc: McConfig::with_samples(common.samples, common.seed)?,
    })
}

fn execute(cli: &Cli) -> Result<Table, Failure> {
    let cfg = config(&cli.common)?;
    match &cli.command {
        Command::CheckBalanced => commands::check_balanced(&cfg),
        Command::EpsilonGrid { grid } => commands::epsilon_grid(&cfg, grid),
        Command::Norm { p, q, oracle } => commands::norm(&cfg, p, q, *oracle),
        Command::Det { point } => commands::det(&cfg, point),
        Command::Kernel { point } => commands::kernel(&cfg, point),
        Command::Verify { suite } => verify::run(&cfg, *suite),
        Command::OracleCompare { degree } => commands::oracle_compare(&cfg, *degree),
    }
}

fn emit(table: &Table, common: &Common) -> io::Result<()> {
    match &common.output {
        Some(path) => {
            let mut out = BufWriter::new(File::create(path)?);
            table.write(common.format, &mut out)?;
            out.flush()
        }
        None => table.write(common.format, &mut io::stdout().lock()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (table, code) = match execute(&cli) {
        Ok(table) => (table, ExitCode::SUCCESS),
        Err(Failure::Verification(table)) => (table, ExitCode::from(1)),
        Err(Failure::Computation(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = emit(&table, &cli.common) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(2);
    }
    code
}
