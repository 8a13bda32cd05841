//! `tautline`: total-variation denoising, isotonic regression, value-function
//! sweeps and verification from the command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 I/O error, 3 parse
//! error, 4 invalid parameter, 64 usage error.

mod commands;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{DenoiseArgs, Scale, VerifyArgs, VerifySource};
use error::{CliError, CliResult, EXIT_OK, EXIT_USAGE};

/// Environment variable overriding the default tolerance.
const TOL_ENV: &str = "TAUTLINE_TOL";

#[derive(Parser)]
#[command(
    name = "tautline",
    version,
    about = "Exact 1D total-variation denoising by the taut string algorithm"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Denoise a signal with parameter lambda.
    #[command(allow_negative_numbers = true)]
    Denoise {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        output: PathBuf,
        /// Also write the taut string to `<stem>.string.csv`.
        #[arg(long)]
        emit_string: bool,
        /// Also write the dual certificate to `<stem>.certificate.csv`.
        #[arg(long)]
        emit_certificate: bool,
        /// Also write `F ± lambda` to `<stem>.tube_upper.csv` and `<stem>.tube_lower.csv`.
        #[arg(long)]
        emit_tube: bool,
        /// Write a JSON diagnostics record here.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Least-squares fit by a non-decreasing signal.
    Isotonic {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Also write the convex envelope and the cumulative signal.
        #[arg(long)]
        emit_envelope: bool,
    },
    /// Tabulate the value function over a lambda grid.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        lambda_min: f64,
        #[arg(long)]
        lambda_max: f64,
        #[arg(long, default_value_t = 16)]
        count: usize,
        #[arg(long, value_enum, default_value_t = Scale::Log)]
        scale: Scale,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run the verification battery and write a pass/fail report.
    #[command(allow_negative_numbers = true)]
    Verify(VerifyCli),
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["input", "random"])))]
struct VerifyCli {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Verify this many random signals instead of an input file.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Check this lambda only (default: a spread of fractions of the G-norm).
    #[arg(long)]
    lambda: Option<f64>,
    /// Verify a supplied certificate (`x,y` nodes) instead of running the battery.
    #[arg(long, requires = "input")]
    certificate: Option<PathBuf>,
    /// Denoised signal paired with `--certificate`.
    #[arg(long, requires = "input")]
    denoised: Option<PathBuf>,
    #[arg(long)]
    report: PathBuf,
}

fn tolerance() -> CliResult<f64> {
    match std::env::var(TOL_ENV) {
        Err(_) => Ok(tautline::DEFAULT_TOL),
        Ok(raw) => match raw.trim().parse::<f64>() {
            Ok(t) if t > 0.0 && t.is_finite() => Ok(t),
            _ => Err(CliError::Parameter(format!(
                "{TOL_ENV} must be a positive number, got {raw:?}"
            ))),
        },
    }
}

fn run(command: Command) -> CliResult<()> {
    let tol = tolerance()?;
    match command {
        Command::Denoise {
            input,
            lambda,
            output,
            emit_string,
            emit_certificate,
            emit_tube,
            diagnostics,
        } => commands::denoise(&DenoiseArgs {
            input,
            lambda,
            output,
            emit_string,
            emit_certificate,
            emit_tube,
            diagnostics,
            tol,
        }),
        Command::Isotonic {
            input,
            output,
            emit_envelope,
        } => commands::isotonic(&input, &output, emit_envelope),
        Command::Sweep {
            input,
            lambda_min,
            lambda_max,
            count,
            scale,
            output,
        } => {
            let lambdas = commands::lambda_grid(lambda_min, lambda_max, count, scale)?;
            commands::sweep(&input, &lambdas, &output, tol)
        }
        Command::Verify(v) => {
            let source = match (v.input, v.random) {
                (Some(path), _) => VerifySource::File(path),
                (None, Some(count)) => VerifySource::Random { count },
                (None, None) => unreachable!("clap enforces a source"),
            };
            commands::verify(&VerifyArgs {
                source,
                seed: v.seed,
                lambda: v.lambda,
                certificate: v.certificate,
                denoised: v.denoised,
                report: v.report,
                tol,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tautline: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
