//! The `robinhom` command line: argument parsing, config resolution,
//! dispatch to the core pipelines, and versioned output.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
mod output;
mod run;

use std::ffi::OsString;

use clap::Parser;

use config::{Cli, FileConfig, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

/// Failures mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(robinhom_core::Error),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<robinhom_core::Error> for CliError {
    fn from(e: robinhom_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use robinhom_core::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(e) if e.is_convergence_failure() => EXIT_NO_CONVERGENCE,
            CliError::Core(E::InvalidParameter(_) | E::HoleTooLarge { .. }) => EXIT_CONFIG,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("robinhom: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let file = match &cli.global.config {
        Some(path) => FileConfig::load(path).map_err(CliError::Config)?,
        None => FileConfig::default(),
    };
    let cfg = RunConfig::resolve(cli, &file).map_err(CliError::Config)?;
    match cfg.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Config(format!("cannot start {t} threads: {e}")))?;
            pool.install(|| run::dispatch(&cfg))
        }
        None => run::dispatch(&cfg),
    }
}
