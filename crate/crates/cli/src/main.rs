//! carmine: mine event shopping aspects and product-type carousels from
//! query-click logs.

mod commands;
mod manifest;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::{evaluate, inspect, mine, sweep, synth, CliError};

#[derive(Parser)]
#[command(
    name = "carmine",
    version,
    about = "Mine event shopping aspects and product-type carousels from query-click logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic log with planted aspects and ground truth.
    Synth(synth::SynthArgs),
    /// Run the full pipeline: filter, graph, cluster, rank carousels.
    Mine(mine::MineArgs),
    /// Score a carousel file against ground truth.
    Evaluate(evaluate::EvaluateArgs),
    /// Run a (tau, mode) grid and emit comparison tables.
    Sweep(sweep::SweepArgs),
    /// Summarize a graph snapshot, partition, carousel, or report file.
    Inspect(inspect::InspectArgs),
}

// Exit codes: 0 success, 1 usage, 2 data/validation, 3 internal.
fn main() {
    // Die quietly when a pipe closes (e.g. `carmine inspect ... | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CARMINE_LOG", "warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            eprintln!("{e}");
            std::process::exit(1);
        }
    };

    let outcome = std::panic::catch_unwind(|| match cli.command {
        Command::Synth(args) => synth::run(args),
        Command::Mine(args) => mine::run(args),
        Command::Evaluate(args) => evaluate::run(args),
        Command::Sweep(args) => sweep::run(args),
        Command::Inspect(args) => inspect::run(args),
    });

    match outcome {
        Ok(Ok(())) => {}
        Ok(Err(err)) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
        Err(_) => {
            // The panic message has already gone to stderr.
            eprintln!("error: internal failure");
            std::process::exit(CliError::INTERNAL_EXIT);
        }
    }
}
