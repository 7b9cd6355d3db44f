//! Command-line front end for `qdka-core`: layered configuration, scan
//! subcommands, CSV/JSON output with a replayable run manifest, and a
//! self-test.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 I/O error.

pub mod args;
pub mod commands;
pub mod config;
pub mod emit;
pub mod error;
pub mod selftest;

pub use args::{Cli, Command};
pub use error::CliError;

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let env_seed = std::env::var(config::SEED_ENV).ok();
    match commands::execute(&cli.command, env_seed.as_deref()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
