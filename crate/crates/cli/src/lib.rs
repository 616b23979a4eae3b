//! Library side of the `stableks` command-line tool: argument definitions,
//! config-file merging, versioned CSV tables, and the subcommands.

pub mod args;
pub mod commands;
pub mod config;
pub mod sidecar;
pub mod table;

use std::ffi::OsString;
use std::process::ExitCode;

use anyhow::Result;

use args::Command;
use sidecar::Run;

/// Exit status for a check that ran and failed (gradcheck, diagnose).
pub const EXIT_CHECK_FAILED: u8 = 1;
/// Exit status for bad arguments, domain errors, and I/O failures.
pub const EXIT_ERROR: u8 = 2;

/// Runs one invocation and returns the process exit code.
pub fn main_with_args(argv: Vec<OsString>) -> ExitCode {
    let resolved = match config::resolve(argv) {
        Ok(r) => r,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(resolved) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECK_FAILED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn execute(resolved: config::Resolved) -> Result<bool> {
    let command = resolved.cli.command.clone();
    let mut run = Run::new(resolved.cli, resolved.argv, resolved.config_entries)?;
    let (pass, sidecar) = match &command {
        Command::Diagnose(a) => {
            let s = commands::diagnose::run(&mut run, a)?;
            (s.pass, run.finish(s)?)
        }
        Command::Dist(a) => {
            let s = commands::dist::run(&mut run, a)?;
            (true, run.finish(s)?)
        }
        Command::Sample(a) => {
            let s = commands::sample::run(&mut run, a)?;
            (true, run.finish(s)?)
        }
        Command::Gradcheck(a) => {
            let s = commands::gradcheck::run(&mut run, a)?;
            (s.pass, run.finish(s)?)
        }
        Command::Bandit(a) => {
            let s = commands::bandit::run(&mut run, a)?;
            (true, run.finish(s)?)
        }
        Command::OracleRegen(_) => {
            let s = commands::oracle::run(&mut run)?;
            (true, run.finish(s)?)
        }
    };
    eprintln!("wrote {}", sidecar.display());
    Ok(pass)
}
