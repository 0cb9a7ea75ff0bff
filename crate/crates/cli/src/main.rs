//! Pipeline driver: ingest -> regress -> pga -> classify, plus a GeoJSON
//! export. Intermediates live in plain-file caches keyed by a content hash
//! of the configuration and the upstream artifact, so a command either
//! reuses earlier work or explains which command to run first.
//!
//! Exit codes: 0 success, 1 finished with logged per-item failures, 2
//! fatal (unreadable input, malformed data, missing prerequisite cache).

use clap::{Parser, Subcommand};

mod cache;
mod classify;
mod config;
mod export;
mod ingest;
mod pga;
mod regress;

#[derive(Parser)]
#[command(
    name = "bezierfold",
    version,
    about = "Spline-based analysis of hurricane best tracks on the sphere"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    config: config::PipelineConfig,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and screen the best-track file into the track cache.
    Ingest,
    /// Fit one- and two-segment splines to every track.
    Regress,
    /// Principal geodesic analysis: Sasaki splines and pointwise baseline.
    Pga,
    /// Cross-validated intensity classification on the PGA scores.
    Classify,
    /// GeoJSON export of tracks, fitted splines, and mode trajectories.
    ExportTracks,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: &Cli) -> anyhow::Result<i32> {
    cli.config.validate()?;
    match cli.command {
        Command::Ingest => ingest::run(&cli.config),
        Command::Regress => regress::run(&cli.config),
        Command::Pga => pga::run(&cli.config),
        Command::Classify => classify::run(&cli.config),
        Command::ExportTracks => export::run(&cli.config),
    }
}
