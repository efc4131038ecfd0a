//! `dol`: estimate diffusion optimal losses, convert between formulations,
//! derive training schedules, and fit offset power laws.

mod commands;
mod manifest;
mod parse;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "dol", version, about = "Diffusion optimal-loss toolkit")]
struct Cli {
    /// Worker thread cap (falls back to DOL_THREADS, then all cores).
    /// Output is identical for any value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Skip writing the run manifest next to the output artifact.
    #[arg(long, global = true)]
    no_manifest: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the optimal-loss curve of a dataset over a noise grid.
    Estimate(commands::EstimateArgs),
    /// Convert native (sigma, loss) tables to the x0/VE view with preconditioners.
    Convert(commands::ConvertArgs),
    /// Build a training schedule (loss weight + adaptive noise density).
    Schedule(commands::ScheduleArgs),
    /// Fit an offset power law to training-curve envelopes.
    Scalefit(commands::ScalefitArgs),
}

fn exit_code(err: &dol_core::Error) -> i32 {
    use dol_core::Error::*;
    match err {
        Format(_) | Data(_) | Io(_) => 2,
        Spec(_) | Config(_) | Unsupported(_) | Alignment(_) | Input(_) | DegenerateFit(_)
        | Offset(_) | NoCriticalPoint(_) => 3,
        Domain(_) | Extrapolation(_) => 4,
    }
}

fn main() {
    let cli = Cli::parse();

    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("DOL_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    if threads > 0 {
        // ignore failure: the global pool can only be built once in-process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let started = std::time::Instant::now();
    let argv: Vec<String> = std::env::args().collect();
    let result = match &cli.command {
        Command::Estimate(args) => commands::run_estimate(args, &argv, cli.no_manifest, started),
        Command::Convert(args) => commands::run_convert(args, &argv, cli.no_manifest, started),
        Command::Schedule(args) => commands::run_schedule(args, &argv, cli.no_manifest, started),
        Command::Scalefit(args) => commands::run_scalefit(args, &argv, cli.no_manifest, started),
    };
    if let Err(err) = result {
        eprintln!("{err}");
        std::process::exit(exit_code(&err));
    }
}
