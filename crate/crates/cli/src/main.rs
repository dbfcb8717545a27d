use clap::{Parser, Subcommand};

use efbv_cli::commands::{
    cmd_certify, cmd_run, cmd_table10, cmd_tune, CertifyArgs, RunArgs, Table10Args, TuneArgs,
};

/// Simulator for distributed gradient methods with compressed communication.
#[derive(Parser)]
#[command(name = "efbv", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report the derived constants (scalings, residual factors, step size)
    /// for a compressor and algorithm family.
    Tune(TuneArgs),
    /// Run experiments from a JSON config, writing per-seed trace CSVs and a
    /// seed-averaged summary.
    Run(RunArgs),
    /// Monte Carlo certification of the closed-form compressor parameters.
    Certify(CertifyArgs),
    /// Print the built-in parameter table for the four reference dataset
    /// shapes at n = 1000.
    Table10(Table10Args),
}

fn main() -> anyhow::Result<()> {
    // Die quietly when stdout is a closed pipe (e.g. `efbv table10 | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match &cli.command {
        Command::Tune(args) => cmd_tune(args),
        Command::Run(args) => cmd_run(args),
        Command::Certify(args) => cmd_certify(args),
        Command::Table10(args) => cmd_table10(args),
    }
}
