use std::path::PathBuf;
use std::process::ExitCode;
use std::{fmt, fs, io::Write as _};

use clap::{Parser, Subcommand, ValueEnum};
use dixlab_core::{CutoffMode, Grid, WeightFunction};

mod commands;

const DEFAULT_GRID: &str = "1:1e4:64";

#[derive(Parser, Debug)]
#[command(
    name = "dixlab",
    version,
    about = "Finite-scale trace functionals on Marcinkiewicz spaces and matrices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Weight: log, expsqrtlog or power:<p> with 0 < p < 1.
    #[arg(long, global = true, default_value = "log")]
    pub psi: WeightFunction,

    /// Step function file (one `<ln t | origin> <ln value | zero>` pair per line).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,

    /// Matrix file: dimension on the first line, then rows of `a+bi` entries.
    #[arg(long, global = true)]
    pub matrix: Option<PathBuf>,

    #[arg(long, global = true, default_value = "adjusted")]
    pub mode: CutoffMode,

    /// Heat-kernel exponent.
    #[arg(long, global = true, allow_negative_numbers = true, default_value_t = 1.0)]
    pub alpha: f64,

    /// Number of counterexample blocks.
    #[arg(long, global = true, default_value_t = 40)]
    pub kmax: u32,

    /// Matrix cutoff range `a:b` (defaults to 1:dim).
    #[arg(long, global = true)]
    pub ngrid: Option<NGrid>,

    /// Log-coordinate grid `umin:umax:points_per_decade`.
    #[arg(long, global = true, default_value = DEFAULT_GRID)]
    pub grid: Grid,

    /// Seed for the random matrix used when `lidskii` gets no `--matrix`.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Subcommand, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    /// Marcinkiewicz norm of a step function or of a matrix's singular values.
    Norm,
    /// Growth conditions of the weight.
    PsiCheck,
    /// Partial-sum ratio, cutoff series and their Cesàro means for a step function.
    Estimate,
    /// Singular-value and eigenvalue trace estimators of a matrix.
    Lidskii,
    /// Counterexample norm, window means and the exp(sqrt(log t)) discrepancy.
    Counterexample,
    /// Heat-kernel series of a step function or a positive matrix.
    Heatkernel,
    /// Runs the acceptance suite; exits 0 only if every criterion passes.
    Accept,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Norm => "norm",
            Command::PsiCheck => "psi-check",
            Command::Estimate => "estimate",
            Command::Lidskii => "lidskii",
            Command::Counterexample => "counterexample",
            Command::Heatkernel => "heatkernel",
            Command::Accept => "accept",
        })
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NGrid(pub u64, pub u64);

impl std::str::FromStr for NGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected a:b, got `{s}`"))?;
        let a: u64 = a.trim().parse().map_err(|_| format!("bad lower end in `{s}`"))?;
        let b: u64 = b.trim().parse().map_err(|_| format!("bad upper end in `{s}`"))?;
        if a == 0 || a > b {
            return Err(format!("need 1 <= a <= b, got `{s}`"));
        }
        Ok(NGrid(a, b))
    }
}

/// Failure of a run, split by exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable or malformed input files: exit 2.
    Config(String),
    /// Divergence, non-convergence or a failed acceptance criterion: exit 1.
    Compute(String),
}

impl From<dixlab_core::Error> for Failure {
    fn from(e: dixlab_core::Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Compute(e.to_string())
        }
    }
}

fn write_output(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Compute(format!("writing {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Compute(format!("writing to stdout: {e}"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = commands::run(&cli).and_then(|out| {
        write_output(&cli, &out.text)?;
        if out.ok {
            Ok(())
        } else {
            Err(Failure::Compute("acceptance suite has failing criteria".into()))
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("dixlab {}: {msg}", cli.command);
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("dixlab {}: {msg}", cli.command);
            ExitCode::from(1)
        }
    }
}
