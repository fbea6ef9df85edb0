//! Command-line front end for the shrinklab experiments.

pub mod commands;
pub mod config;
pub mod output;

use std::io::Write;

use clap::Parser;

use config::{Args, ExperimentConfig};

/// Runs one invocation and returns the process exit code: 0 on success, 2
/// when a verified bound came out false, 1 on any other error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn execute(args: Args) -> anyhow::Result<i32> {
    let cfg = ExperimentConfig::from_args(args)?;
    if let Some(n) = cfg.threads {
        if n == 0 {
            anyhow::bail!("--threads must be positive");
        }
        shrinklab::par::set_threads(n);
    }
    let out = commands::dispatch(&cfg)?;
    match &cfg.out {
        Some(p) => std::fs::write(p, &out.csv).map_err(|e| anyhow::anyhow!("writing {}: {e}", p.display()))?,
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(out.csv.as_bytes())?;
            so.flush()?;
        }
    }
    if let Some(n) = &out.note {
        eprintln!("{n}");
    }
    if let Some(f) = out.failure {
        anyhow::bail!(f);
    }
    if out.violated {
        eprintln!("bound violated: see the rows marked false");
        return Ok(2);
    }
    Ok(0)
}
