use std::process::ExitCode;

use clap::Parser;
use explab::cli::Cli;
use explab::manifest::RunStatus;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match explab::run(&cli) {
        Ok(m) => {
            eprintln!("{}: {:?} ({})", m.command, m.status, m.config.out.display());
            if m.status == RunStatus::Passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
