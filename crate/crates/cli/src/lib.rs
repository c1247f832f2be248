//! Command-line front end for `phasepath-core`.
//!
//! Exit status: 0 on success, 1 on usage errors (bad flags, unreadable or
//! malformed input, parameters outside their preconditions), 2 on domain
//! errors (singular times, degenerate pins), 3 when a verification suite ran
//! but a check failed.

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

pub mod args;
mod commands;
pub mod fspec;
pub mod output;
mod sweep;
mod verify;

use args::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] phasepath_core::Error),
    #[error("verification suite `{0}` failed")]
    VerificationFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 1,
            CliError::Core(e) if e.is_domain_error() => 2,
            CliError::Core(_) => 1,
            CliError::VerificationFailed(_) => 3,
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::PropagatorFree(a) => commands::propagator_free(&a),
        Command::PropagatorHo(a) => commands::propagator_ho(&a),
        Command::Ttransform(a) => commands::ttransform(&a),
        Command::Verify(a) => verify::run(&a),
        Command::Sweep(a) => sweep::run(&a),
    }
}

/// Parses `argv`, runs the command and returns the exit status. Diagnostics
/// go to standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            e.exit_code()
        }
    }
}
