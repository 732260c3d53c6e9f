//! `sfv`: command-line frontend for safety-rate verification.
//!
//! `verify` exits 0 when every property is fully proved, 1 when any
//! violation mass is found, 2 when only undecided mass remains, and 3 on
//! errors (bad arguments, unreadable or malformed inputs).

mod args;
mod bench;
mod inspect;
mod manifest;
mod verify;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use args::{Cli, Command};

const EXIT_ERROR: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(cli: &Cli) -> Result<u8> {
    let common = match &cli.command {
        Command::Verify(a) => &a.common,
        Command::Bench(a) => &a.common,
        Command::Bounds(a) => &a.common,
        Command::Oracle(a) => &a.common,
    };
    let cfg = manifest::resolve(common)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build()?;
    pool.install(|| match &cli.command {
        Command::Verify(_) => verify::run(&cfg),
        Command::Bench(a) => bench::run(&cfg, a),
        Command::Bounds(a) => inspect::bounds(&cfg, a),
        Command::Oracle(a) => inspect::oracle(&cfg, a),
    })
}
