//! `ovfree <command> --in <path> --out <path>`: JSON in, canonical JSON out.
//!
//! Exit codes: 0 success, 1 a verification ran and failed (or an internal
//! error), 2 input error, 3 precondition violated (certificate written).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use commands::{Options, Outcome};
use ovfree::io::to_canonical_string;
use ovfree::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    /// Complete positivity of η and of η - id.
    CheckCp,
    /// Moments and cumulants of the η-convolution power.
    ConvolvePower,
    /// Moment-matrix positivity test at `--level`.
    Positivity,
    /// Fock-space realization against the cumulant route.
    VerifyRealization,
    /// Witness, compression and non-positivity certificate.
    Counterexample,
}

#[derive(Debug, Parser)]
#[command(
    name = "ovfree",
    version,
    about = "Operator-valued free convolution powers"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    #[arg(long = "out", value_name = "PATH")]
    output: PathBuf,
    /// Moment order [default: 6].
    #[arg(long)]
    order: Option<usize>,
    #[arg(long, default_value_t = 3)]
    level: usize,
    /// Fock truncation depth [default: order + 2].
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotCompletelyPositive(_) => 3,
        Error::Degenerate(_) => 1,
        _ => 2,
    }
}

fn run(cli: &Cli) -> Result<(Outcome, u8), (String, u8)> {
    let input = std::fs::read_to_string(&cli.input)
        .map_err(|e| (format!("cannot read {}: {e}", cli.input.display()), 2))?;
    let opts = Options {
        order: cli.order,
        level: cli.level,
        depth: cli.depth,
        tol: cli.tol,
    };
    let result = match cli.command {
        Command::CheckCp => commands::check_cp(&input, &opts),
        Command::ConvolvePower => commands::convolve_power(&input, &opts),
        Command::Positivity => commands::positivity(&input, &opts),
        Command::VerifyRealization => commands::verify_realization(&input, &opts),
        Command::Counterexample => commands::counterexample(&input, &opts),
    };
    match result {
        Ok(outcome) => {
            let code = match outcome {
                Outcome::Done(_) => 0,
                Outcome::CheckFailed(_) => 1,
                Outcome::Precondition { .. } => 3,
            };
            Ok((outcome, code))
        }
        Err(e) => Err((e.to_string(), exit_code(&e))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (outcome, code) = match run(&cli) {
        Ok(r) => r,
        Err((message, code)) => {
            eprintln!("ovfree: {message}");
            return ExitCode::from(code);
        }
    };
    let value = match outcome {
        Outcome::Done(v) => v,
        Outcome::CheckFailed(v) => {
            eprintln!("ovfree: verification failed");
            v
        }
        Outcome::Precondition { report, message } => {
            eprintln!("ovfree: {message}");
            report
        }
    };
    if let Err(e) = std::fs::write(&cli.output, to_canonical_string(value)) {
        eprintln!("ovfree: cannot write {}: {e}", cli.output.display());
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
