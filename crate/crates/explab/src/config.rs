//! Run configuration: defaults, an optional TOML file, then command-line
//! flags, in increasing precedence.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use blocklcs::modification::DEFAULT_DRIFT_CAP;
use blocklcs::{Engine, ModelParams, RandomSeed};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

pub const DEFAULT_L: usize = 10;
pub const DEFAULT_N: usize = 4096;
pub const DEFAULT_SEED: RandomSeed = 0;
pub const DEFAULT_REPS: usize = 200;
pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_C: f64 = 1.0;
pub const DEFAULT_K: usize = 200;
pub const DEFAULT_XI_CAP: u64 = 1_000_000;
pub const DEFAULT_OUT: &str = "explab-run";

/// `c2 = 80 / epsilon^2`.
pub fn default_c2(epsilon: f64) -> f64 {
    80.0 / (epsilon * epsilon)
}

/// LCS engine, or none for runs that only need block statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineChoice {
    Reference,
    #[default]
    Bitparallel,
    None,
}

impl EngineChoice {
    pub fn engine(self) -> Option<Engine> {
        match self {
            EngineChoice::Reference => Some(Engine::Reference),
            EngineChoice::Bitparallel => Some(Engine::BitParallel),
            EngineChoice::None => None,
        }
    }
}

impl FromStr for EngineChoice {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "reference" => Ok(EngineChoice::Reference),
            "bitparallel" | "bit-parallel" => Ok(EngineChoice::Bitparallel),
            "none" => Ok(EngineChoice::None),
            other => Err(CliError::Config(format!(
                "unknown engine {other:?} (expected reference, bitparallel or none)"
            ))),
        }
    }
}

impl fmt::Display for EngineChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineChoice::Reference => "reference",
            EngineChoice::Bitparallel => "bitparallel",
            EngineChoice::None => "none",
        })
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML file with any of the keys below, or a previous run's manifest.json
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// block parameter: complete blocks have length l-1, l or l+1
    #[arg(long, global = true)]
    pub l: Option<usize>,
    /// string length
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// master seed
    #[arg(long, global = true)]
    pub seed: Option<RandomSeed>,
    /// replicates (pairs, strings or runs, depending on the command)
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// slope-event window scale; defaults to 80 / epsilon^2
    #[arg(long, global = true)]
    pub c2: Option<f64>,
    /// domain half-width in units of sqrt(n)
    #[arg(long, global = true)]
    pub c: Option<f64>,
    /// reference, bitparallel or none
    #[arg(long, global = true)]
    pub engine: Option<EngineChoice>,
    /// run directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// largest n1*n3 for which drifts are enumerated exactly
    #[arg(long, global = true)]
    pub cap: Option<u64>,
    /// draws per sampled drift
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// largest conditional support enumerated exactly
    #[arg(long, global = true)]
    pub xi_cap: Option<u64>,
}

/// Keys accepted in a TOML configuration file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub l: Option<usize>,
    pub n: Option<usize>,
    pub seed: Option<RandomSeed>,
    pub reps: Option<usize>,
    pub epsilon: Option<f64>,
    pub c2: Option<f64>,
    pub c: Option<f64>,
    pub engine: Option<EngineChoice>,
    pub out: Option<PathBuf>,
    pub cap: Option<u64>,
    pub k: Option<usize>,
    pub xi_cap: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let manifest: RunManifest = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            return Ok(manifest.config.into());
        }
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved configuration, echoed into every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub l: usize,
    pub n: usize,
    pub seed: RandomSeed,
    pub reps: usize,
    pub epsilon: f64,
    pub c2: f64,
    pub c: f64,
    pub engine: EngineChoice,
    pub out: PathBuf,
    pub cap: u64,
    pub k: usize,
    pub xi_cap: u64,
}

impl From<RunConfig> for FileConfig {
    fn from(c: RunConfig) -> Self {
        Self {
            l: Some(c.l),
            n: Some(c.n),
            seed: Some(c.seed),
            reps: Some(c.reps),
            epsilon: Some(c.epsilon),
            c2: Some(c.c2),
            c: Some(c.c),
            engine: Some(c.engine),
            out: Some(c.out),
            cap: Some(c.cap),
            k: Some(c.k),
            xi_cap: Some(c.xi_cap),
        }
    }
}

impl RunConfig {
    pub fn resolve(args: &ConfigArgs) -> CliResult<Self> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let epsilon = args.epsilon.or(file.epsilon).unwrap_or(DEFAULT_EPSILON);
        let config = Self {
            l: args.l.or(file.l).unwrap_or(DEFAULT_L),
            n: args.n.or(file.n).unwrap_or(DEFAULT_N),
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            reps: args.reps.or(file.reps).unwrap_or(DEFAULT_REPS),
            epsilon,
            c2: args.c2.or(file.c2).unwrap_or_else(|| default_c2(epsilon)),
            c: args.c.or(file.c).unwrap_or(DEFAULT_C),
            engine: args.engine.or(file.engine).unwrap_or_default(),
            out: args
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            cap: args.cap.or(file.cap).unwrap_or(DEFAULT_DRIFT_CAP),
            k: args.k.or(file.k).unwrap_or(DEFAULT_K),
            xi_cap: args.xi_cap.or(file.xi_cap).unwrap_or(DEFAULT_XI_CAP),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if self.l < 2 {
            return fail(format!("l = {} must be at least 2", self.l));
        }
        if self.n == 0 {
            return fail("n must be positive".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return fail(format!("epsilon = {} must lie in (0, 1)", self.epsilon));
        }
        if !(self.c2 > 0.0 && self.c2.is_finite()) {
            return fail(format!("c2 = {} must be positive", self.c2));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return fail(format!("c = {} must be positive", self.c));
        }
        if self.cap == 0 || self.xi_cap == 0 {
            return fail("enumeration caps must be positive".into());
        }
        if self.k < 2 {
            return fail(format!("k = {} draws, need at least 2", self.k));
        }
        Ok(())
    }

    pub fn params(&self) -> CliResult<ModelParams> {
        Ok(ModelParams::new(self.l, self.n)?)
    }

    /// The configured engine, for commands that cannot run without one.
    pub fn require_engine(&self) -> CliResult<Engine> {
        self.engine
            .engine()
            .ok_or_else(|| CliError::Config("this command needs an LCS engine, got none".into()))
    }
}
