//! Command-line driver for `gradsense`: TOML configuration in, JSON reports
//! and CSV tables out.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

use crate::commands::Command;
use crate::error::{CliError, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "gradsense", version, about = "Boundary-gradient strategic sensor analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Reads `GRADSENSE_THREADS` and sizes the global pool.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("GRADSENSE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Usage(format!("GRADSENSE_THREADS={raw:?}: expected an integer >= 1")))?;
    // A pool that already exists keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs one command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let outcome = configure_threads().and_then(|()| commands::dispatch(cli.command));
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
