//! Command-line runner: experiments to CSV traces, trace summaries, the
//! bound-verification report, and direct evaluation of the closed-form
//! constants.
//!
//! Exit codes: 0 on success, 1 on bad input (arguments, config files, data
//! parsing), 2 on runtime failures.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use rna_core::harness::{
    run_experiment, summarize_file, verify_bounds, write_summary_csv, ExperimentConfig,
    VerifyConfig,
};
use rna_core::theory::{chebyshev_minimax, sqrt_fun_max, SqrtMaxRegime};
use rna_core::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rna", version, about = "Regularized nonlinear acceleration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and stream its CSV trace.
    Run {
        /// TOML experiment config.
        config: PathBuf,
    },
    /// Print threshold-crossing medians of a trace file as CSV.
    Summarize {
        /// Trace file produced by `run`.
        trace: PathBuf,
    },
    /// Run the Monte-Carlo bound checks and write the report.
    VerifyBounds {
        /// TOML report config.
        config: PathBuf,
    },
    /// Evaluate the regularized minimax polynomial value.
    Chebyshev {
        /// Polynomial order.
        #[arg(long)]
        k: usize,
        /// Inverse condition number in (0, 1).
        #[arg(long)]
        kappa: f64,
        /// Coefficient-norm regularization weight, >= 0.
        #[arg(long)]
        alpha: f64,
    },
    /// Maximize sqrt(a - lambda x^2) / kappa + b x over its domain.
    Sqrtmax {
        #[arg(long)]
        a: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        kappa: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version arrive here too and are not failures.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// 1 for anything wrong with what the user handed in, 2 for failures while
/// acting on valid input.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidInput(_) | Error::Config(_) | Error::Parse { .. } => 1,
        _ => 2,
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { config } => {
            let config = ExperimentConfig::from_toml_path(&config)?;
            let stats = run_experiment(&config)?;
            let output = config.output.as_deref().expect("run_experiment requires it");
            println!(
                "wrote {} records from {} cells to {}",
                stats.records,
                stats.cells,
                output.display()
            );
            if stats.diverged_cells > 0 {
                println!("{} cells diverged", stats.diverged_cells);
            }
            Ok(())
        }
        Command::Summarize { trace } => {
            if !trace.is_file() {
                return Err(Error::InvalidInput(format!(
                    "trace file {} does not exist",
                    trace.display()
                )));
            }
            let summaries = summarize_file(&trace)?;
            write_summary_csv(&summaries, std::io::stdout().lock())
        }
        Command::VerifyBounds { config } => {
            let config = VerifyConfig::from_toml_path(&config)?;
            let stats = verify_bounds(&config)?;
            let output = config.output.as_deref().expect("verify_bounds requires it");
            println!(
                "wrote {} rows to {}; {} violations",
                stats.rows,
                output.display(),
                stats.violations
            );
            Ok(())
        }
        Command::Chebyshev { k, kappa, alpha } => {
            let solution = chebyshev_minimax(k, kappa, alpha)?;
            println!("value {}", solution.value());
            let weights: Vec<String> =
                solution.coefficients().iter().map(|c| c.to_string()).collect();
            println!("coefficients {}", weights.join(" "));
            Ok(())
        }
        Command::Sqrtmax { a, b, lambda, kappa } => {
            let max = sqrt_fun_max(a, b, lambda, kappa)?;
            let regime = match max.regime {
                SqrtMaxRegime::Interior => "interior",
                SqrtMaxRegime::Boundary => "boundary",
            };
            println!("x_opt {}", max.x_opt);
            println!("f_max {}", max.f_max);
            println!("regime {regime}");
            Ok(())
        }
    }
}
