use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod input;
mod report;

/// Verification suites and flows for pencils of r-matrix brackets on matrix polynomials.
///
/// Reports are JSON on stdout unless `--out` is given. Exit status is 0 when
/// every check passes, 1 on a numerical failure and 2 on bad input.
#[derive(Debug, Parser)]
#[command(name = "rpencil", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectral curve of φ as JSON; checks interpolation against the adjugate recursion.
    Curve,
    /// Separation coordinates as JSON; checks the curve equation and the adjugate method.
    Divisor,
    /// R-form against tensor-form brackets at random spectral parameters.
    BracketCheck,
    /// Finite-difference Jacobi identity.
    JacobiCheck,
    /// Casimirs at the zeros of the pencil polynomial, and the curve from a Casimir sweep.
    CasimirCheck,
    /// Recursion operator spectrum, orthogonality and the simultaneous normal form.
    NijenhuisCheck,
    /// RK4 flow of one spectral invariant; CSV of the coefficients of φ.
    Flow,
    /// Linearizing coordinates along a flow; CSV of Q·E.
    Linearize,
    /// Neumann oscillator; CSV of x, y and energy.
    Neumann,
}

#[derive(Debug, Clone, Args)]
pub struct Opts {
    /// Phase point JSON (Neumann state JSON for `neumann`). Random from the seed if absent.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,

    /// Pencil JSON, inline or as a path.
    #[arg(long, global = true)]
    pub pencil: Option<String>,

    /// Tolerance for every check in the report. Each command has its own default.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Report path.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Curve or divisor JSON, or trajectory CSV. Curve and divisor go to stdout
    /// if absent; CSV is then written next to `--out`, or not at all.
    #[arg(long, global = true)]
    pub artifact: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 2)]
    pub r: usize,

    #[arg(long, global = true, default_value_t = 2)]
    pub n: usize,

    /// Integration time.
    #[arg(long = "T", global = true)]
    pub t_end: Option<f64>,

    #[arg(long, global = true, default_value_t = 1e-3)]
    pub step: f64,

    /// Finite-difference step.
    #[arg(long, global = true)]
    pub h: Option<f64>,

    /// Flow label `j,k`: the coefficient of z^j λ^k.
    #[arg(long, global = true, value_parser = input::label)]
    pub label: Option<(usize, usize)>,

    /// Sample every this many steps when linearizing.
    #[arg(long, global = true, default_value_t = 50)]
    pub every: usize,

    /// Neumann potential, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub alpha: Option<Vec<f64>>,
}

pub enum Failure {
    Input(anyhow::Error),
    Numerical(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Curve => commands::curve(&cli.opts),
        Command::Divisor => commands::divisor(&cli.opts),
        Command::BracketCheck => commands::bracket_check(&cli.opts),
        Command::JacobiCheck => commands::jacobi_check(&cli.opts),
        Command::CasimirCheck => commands::casimir_check(&cli.opts),
        Command::NijenhuisCheck => commands::nijenhuis_check(&cli.opts),
        Command::Flow => commands::flow(&cli.opts),
        Command::Linearize => commands::linearize(&cli.opts),
        Command::Neumann => commands::neumann(&cli.opts),
    };
    match result {
        Ok(failed) if failed.is_empty() => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("failed checks: {}", failed.join(", "));
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
