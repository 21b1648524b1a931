//! Command-line runner for the `fermi-landauer` scenarios.
//!
//! Exit codes: 0 on success, 1 for configuration errors, 2 for numerical
//! failures (including output that could not be written).

pub mod config;
pub mod emit;
pub mod error;
pub mod scenario;

use std::ffi::OsString;
use std::path::PathBuf;

pub use config::{parse_settings, resolve, RunConfig};
pub use error::CliError;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "FERMI_LANDAUER_THREADS";

fn worker_count(requested: Option<usize>) -> Result<usize, CliError> {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let cap = match std::env::var(THREADS_ENV) {
        Ok(raw) => raw
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                CliError::Config(format!("{THREADS_ENV}={raw} is not a positive integer"))
            })?,
        Err(_) => usize::MAX,
    };
    match requested {
        Some(0) => Err(CliError::Config("`run.threads` must be positive".into())),
        Some(n) => Ok(n.min(cap)),
        None => Ok(available.min(cap)),
    }
}

/// Parse, compute and write; returns the files written.
pub fn execute<I, T>(args: I) -> Result<Vec<PathBuf>, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let (settings, threads) = parse_settings(args)?;
    let cfg = resolve(&settings)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(threads)?)
        .build()
        .map_err(|e| CliError::Numerical(format!("cannot start worker pool: {e}")))?;
    let artifacts = pool.install(|| scenario::run(&cfg))?;
    emit::write_all(&cfg.output, &artifacts)
}

/// Run the command line and report errors on stderr; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match execute(args) {
        Ok(paths) => {
            for path in paths {
                println!("{}", path.display());
            }
            0
        }
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            CliError::Clap(e).exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
