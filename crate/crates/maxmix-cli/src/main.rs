//! maxmix: simulate, diagnose, and fit max-mixture spatial extreme models.

mod commands;
mod config;
mod io;

use clap::{Parser, Subcommand};
use maxmix::Error;

#[derive(Parser)]
#[command(
    name = "maxmix",
    version,
    about = "Simulate, diagnose, and fit max-mixture spatial extreme models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a model and write sample/site CSVs.
    Simulate(commands::simulate::SimulateArgs),
    /// Estimate the empirical F-madogram curve from a sample.
    Madogram(commands::madogram::MadogramArgs),
    /// Fit one model to a sample and write a FitResult JSON.
    Fit(commands::fit::FitArgs),
    /// Run the simulate-and-refit comparison study.
    Study(commands::study::StudyArgs),
    /// Rank-transform raw observations into a fitting-ready sample.
    Transform(commands::transform::TransformArgs),
    /// Fit several models and rank them by information criterion.
    Select(commands::select::SelectArgs),
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => commands::simulate::run(&args),
        Command::Madogram(args) => commands::madogram::run(&args),
        Command::Fit(args) => commands::fit::run(&args),
        Command::Study(args) => commands::study::run(&args),
        Command::Transform(args) => commands::transform::run(&args),
        Command::Select(args) => commands::select::run(&args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}

/// Wrap an I/O failure as a data error carrying the offending path.
pub(crate) fn io_err(path: &std::path::Path, err: std::io::Error) -> Error {
    Error::Data(format!("{}: {err}", path.display()))
}
