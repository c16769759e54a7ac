//! Command-line experiment harness over `blocklcs`.
//!
//! Every command resolves a [`config::RunConfig`], opens a run directory with
//! a manifest, writes its outputs atomically and records pass or fail.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod verify;

use cli::{Cli, Command};
use config::RunConfig;
use error::CliResult;
use manifest::{RunDir, RunManifest};

/// Runs one parsed invocation and returns its finished manifest.
pub fn run(cli: &Cli) -> CliResult<RunManifest> {
    let cfg = RunConfig::resolve(&cli.config)?;
    let mut dir = RunDir::create(&cfg, &cli.command.label())?;
    let passed = match &cli.command {
        Command::Generate => commands::generate(&cfg, &mut dir),
        Command::Verify { suite } => commands::verify(&cfg, &mut dir, *suite),
        Command::Drift => commands::drift(&cfg, &mut dir),
        Command::Ladder { t, r } => commands::ladder(&cfg, &mut dir, *t, *r),
        Command::Scan { ns } => commands::scan(&cfg, &mut dir, ns),
        Command::CalibrateDomain { target } => commands::calibrate_domain(&cfg, &mut dir, *target),
        Command::Report { ns } => commands::report(&cfg, &mut dir, ns),
        Command::Lcs { input } => commands::lcs(&cfg, &mut dir, input),
    };
    match passed {
        Ok(p) => dir.finish(p),
        Err(e) => {
            // leave a failed manifest behind before reporting the error
            let _ = dir.finish(false);
            Err(e)
        }
    }
}
