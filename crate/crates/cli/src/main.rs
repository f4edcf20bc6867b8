//! `mcf`: simulate, reconstruct and study lensless multicore-fiber
//! single-pixel imaging from the command line.

mod cli;
mod config;
mod exit;
mod geometry;
mod measure;
mod store;
mod sweep;

use std::process::ExitCode;

use clap::Parser;

use crate::cli::{Cli, Command};
use crate::config::RunConfig;
use crate::exit::Failure;

fn run(cli: Cli) -> Result<u8, Failure> {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build_global()
            .map_err(|e| Failure::new(exit::IO, e.to_string()))?;
    }
    let base = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let explicit_config = cli.config.is_some();
    match cli.command {
        Command::Geometry(a) => geometry::run(base, &a),
        Command::Simulate(a) => measure::simulate(base, &a),
        Command::Reconstruct(a) => measure::reconstruct(base, explicit_config, &a),
        Command::PhaseDiagram(a) => sweep::phase_diagram(base, &a),
        Command::Rip(a) => sweep::rip(base, &a),
        Command::Benchmark(a) => sweep::benchmark(base, &a),
        Command::Selftest(a) => measure::selftest(a.seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::CONFIG
            } else {
                exit::OK
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "error",
        (false, 0) => "warn",
        (false, 1) => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
