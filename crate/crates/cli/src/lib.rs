//! The `latvae` command line: cell constants, theta series, verification
//! suites, training, evaluation and code emission.

pub mod checkpoint;
pub mod codes;
pub mod config;
pub mod data;

mod commands;
mod report;

use std::process::ExitCode;

use clap::Parser;

pub use commands::Cli;

/// Outcome of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

/// Parses `args`, runs the command and maps the outcome to an exit code:
/// 0 success, 1 failed check or runtime error, 2 usage or config error.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match cli.run() {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<config::UsageError>() { 2 } else { 1 })
        }
    }
}
