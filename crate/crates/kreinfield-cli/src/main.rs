//! Scenario runner: load a config, build the model, run the diagnostic
//! pipeline, emit reports. Exit code 0 = all declared expectations
//! pass, 1 = an expectation failed, 2 = configuration error.

mod pipeline;
mod sweep;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "kreinfield", about = "Lattice Dirac/Klein-Gordon spectral lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full diagnostic pipeline on one scenario.
    Run {
        /// Scenario JSON path.
        config: std::path::PathBuf,
        /// Output directory for reports (default: alongside the config).
        #[arg(long)]
        out: Option<std::path::PathBuf>,
        /// Persist kernel frames (header JSON + raw complex doubles).
        #[arg(long)]
        dump_kernels: bool,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Emit gnuplot-compatible power profiles.
        #[arg(long)]
        plots: bool,
    },
    /// Sweep one scalar config path over a list of values.
    Sweep {
        /// Base scenario JSON path.
        config: std::path::PathBuf,
        /// Dotted path of the scalar to vary, e.g. potential.v.v0 or grid.n.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
        /// Output CSV path (default: stdout).
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            out,
            dump_kernels,
            seed,
            plots,
        } => pipeline::run(&config, out.as_deref(), dump_kernels, seed, plots),
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => sweep::run(&config, &param, &values, out.as_deref()),
    };
    std::process::exit(code);
}
