use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::ConfigArgs;
use crate::verify::Suite;

#[derive(Debug, Parser)]
#[command(name = "explab", version, about = "Experiments on the LCS of random block strings")]
pub struct Cli {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample `reps` (X, Y) pairs and write their symbols and statistics
    Generate,
    /// Run a verification suite; exits nonzero if it fails
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
    /// Drift of the LCS under one paired modification, per replicate
    Drift,
    /// Build the conditioned ladder for (t, r) against a random Y
    Ladder {
        /// block count; defaults to the admissible value closest to n / l
        #[arg(long, allow_hyphen_values = true)]
        t: Option<i64>,
        /// rest length
        #[arg(long, default_value_t = 0)]
        r: i64,
    },
    /// Sample variances of L and Z over a grid of n, with linear fits
    Scan {
        #[arg(long, value_delimiter = ',', default_values_t = [1024, 2048, 4096, 8192])]
        ns: Vec<usize>,
    },
    /// Smallest grid c whose domain covers the target share of (T, Z)
    CalibrateDomain {
        #[arg(long, default_value_t = 0.9)]
        target: f64,
    },
    /// Exact minimum of n P and ratio deviation over the domain on a grid of n
    Report {
        #[arg(long, value_delimiter = ',', default_values_t = [900, 3600, 14400])]
        ns: Vec<usize>,
    },
    /// LCS lengths for a CSV of `x,y` pairs
    Lcs {
        #[arg(long)]
        input: PathBuf,
    },
}

impl Command {
    pub fn label(&self) -> String {
        match self {
            Command::Generate => "generate".into(),
            Command::Verify { suite } => format!("verify {}", suite.name()),
            Command::Drift => "drift".into(),
            Command::Ladder { .. } => "ladder".into(),
            Command::Scan { .. } => "scan".into(),
            Command::CalibrateDomain { .. } => "calibrate-domain".into(),
            Command::Report { .. } => "report".into(),
            Command::Lcs { .. } => "lcs".into(),
        }
    }
}
