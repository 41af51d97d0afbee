//! Command-line driver: experiment runs, sweeps and verification suites.

pub mod args;
pub mod experiment;
pub mod failure;
pub mod runner;
pub mod verify;

use args::{Cli, Command};
use experiment::ExperimentSpec;
use failure::Failure;

/// Executes a parsed command line.
pub fn execute(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Run(a) | Command::Sweep(a) => {
            let spec = ExperimentSpec::resolve(a, matches!(cli.command, Command::Sweep(_)))?;
            let cells = spec.cells();
            log::info!("{} configurations x {} trials into {}", cells.len(), spec.trials, spec.out.display());
            let files = runner::cmd_run(&spec)?;
            println!("wrote {} files to {}", files.len(), spec.out.display());
            Ok(())
        }
        Command::Verify(a) => {
            print!("{}", verify::cmd_verify(a)?);
            Ok(())
        }
    }
}
