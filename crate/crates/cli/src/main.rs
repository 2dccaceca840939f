mod analyze;
mod check;
mod filter_spec;
mod simulate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use focused_fdr::FdrError;

#[derive(Parser)]
#[command(
    name = "focused-fdr",
    version,
    about = "Filter-aware false discovery rate control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a procedure on a p-value file and write result.csv.
    Analyze(analyze::AnalyzeArgs),
    /// Run a seeded Monte Carlo experiment and write its report CSV.
    Simulate(simulate::SimulateArgs),
    /// Exhaustively check filter properties on a small domain.
    CheckFilter(check::CheckArgs),
    /// Print the maximal filtered true discovery mass of a simulation.
    Tmax(simulate::TmaxArgs),
}

/// Errors in the user's input, reported with exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let input = err.chain().any(|e| {
        e.is::<InputError>()
            || matches!(
                e.downcast_ref::<FdrError>(),
                Some(
                    FdrError::InvalidInput(_)
                        | FdrError::Parse { .. }
                        | FdrError::IndexOutOfRange { .. }
                        | FdrError::DomainTooLarge(_)
                )
            )
    });
    if input {
        2
    } else {
        1
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("FOCUSED_FDR_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| input_error(format!("FOCUSED_FDR_THREADS='{v}' is not a thread count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Analyze(a) => analyze::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::CheckFilter(a) => check::run(a),
        Command::Tmax(a) => simulate::tmax(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
