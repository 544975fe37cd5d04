//! `fermitherm`: command-line driver for the solver.
//!
//! Exit codes: 0 success, 1 usage, 2 model-regime refusal, 3 audit failure,
//! 4 convergence failure.

mod args;
mod commands;
mod config;
mod output;
mod result_file;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Failure;

/// Caps the worker threads used by sweeps and stability scans.
const THREADS_VAR: &str = "FERMITHERM_THREADS";

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Usage(format!("{THREADS_VAR} must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn run() -> Result<(), Failure> {
    let argv = config::expand(std::env::args_os().collect()).map_err(Failure::Usage)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => return Err(Failure::Usage(e.render().to_string())),
    };
    init_threads()?;
    match &cli.command {
        Command::Entropy(a) => commands::entropy(a),
        Command::Linear(a) => commands::linear(a),
        Command::Minimize(a) => commands::minimize(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Evolve(a) => commands::evolve_cmd(a),
        Command::Stability(a) => commands::stability(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = f.message();
            eprintln!("{}", msg.trim_end());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
