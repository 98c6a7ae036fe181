mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Flags;
use run::CliError;

/// Period problems, meshes and flat structures for doubly periodic minimal
/// surfaces.
#[derive(Debug, Parser)]
#[command(name = "periodforge", version, about)]
struct Cli {
    /// TOML file supplying any flag; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the period problem and write a solution record.
    Solve(Flags),
    /// Recompute residuals for a record and print a certification verdict.
    Verify(Flags),
    /// Continue a parallel-end family over a pin schedule.
    Sweep(Flags),
    /// Mesh the fundamental domain as OBJ.
    Mesh(Flags),
    /// Develop the flat structure as SVG plus a vertex list.
    Flat(Flags),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("periodforge: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    run::apply_thread_cap()?;
    let file = match &cli.config {
        Some(path) => config::load(path)?,
        None => Flags::default(),
    };
    match cli.command {
        Command::Solve(f) => run::solve(&f.over(file)),
        Command::Verify(f) => run::verify(&f.over(file)),
        Command::Sweep(f) => run::sweep(&f.over(file)),
        Command::Mesh(f) => run::mesh(&f.over(file)),
        Command::Flat(f) => run::flat(&f.over(file)),
    }
}
