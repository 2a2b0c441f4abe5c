//! The `sgn` command-line tool: experiment runners with a fixed exit-code
//! contract (0 success, 1 failed check or runtime error, 2 usage error).

pub mod args;
mod commands;
mod output;

use std::ffi::OsString;
use std::fmt;
use std::time::Instant;

use clap::Parser;
use serde::Serialize;

pub use args::{Cli, Command, Format};
pub use output::Check;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or invalid configuration. Nothing is written.
    Usage(String),
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    seed: u64,
    format: &'a str,
    config: serde_json::Value,
    artifacts: &'a [String],
    passed: bool,
    wall_time_seconds: f64,
}

/// Outcome of a completed run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    let seed = cli.common.seed.unwrap_or(0);
    let plan = commands::plan(cli)?;
    let mut out = output::Output::create(&cli.common.out, cli.common.format)?;
    let checks = plan.run(seed, &mut out)?;
    out.json("checks.json", &checks)?;
    let summary = RunSummary {
        artifacts: out.artifacts().to_vec(),
        checks,
    };
    out.manifest(&Manifest {
        subcommand: cli.command.name(),
        seed,
        format: cli.common.format.name(),
        config: plan.echo(),
        artifacts: &summary.artifacts,
        passed: summary.passed(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })?;
    Ok(summary)
}

/// Parses `argv`, runs, prints a summary and returns the exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(summary) => {
            for c in &summary.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("wrote {} files to {}", summary.artifacts.len() + 1, cli.common.out.display());
            if summary.passed() {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        Err(e @ CliError::Usage(_)) => {
            eprintln!("{e}");
            eprintln!("usage: sgn <SUBCOMMAND> [--seed N] [--out DIR] [--format csv|json] [--config FILE] [options]");
            eprintln!("run `sgn --help` for the list of subcommands");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("{e}");
            EXIT_FAILED
        }
    }
}
