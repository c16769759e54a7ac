//! Run directories: a manifest written before any output and rewritten when
//! the command ends, plus atomic file writes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use blocklcs::seed::derive_seed;
use blocklcs::RandomSeed;
use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliResult;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Passed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    /// `derive_seed(seed, label, 0)` for each label the command used;
    /// replicate `i` of a label uses index `i`
    pub seeds: BTreeMap<String, RandomSeed>,
    pub outputs: Vec<String>,
    pub status: RunStatus,
    pub started_at: String,
    pub finished_at: Option<String>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// An open run directory.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    manifest: RunManifest,
}

impl RunDir {
    /// Creates the directory and writes the initial manifest.
    pub fn create(config: &RunConfig, command: &str) -> CliResult<Self> {
        fs::create_dir_all(&config.out)?;
        let dir = Self {
            root: config.out.clone(),
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                config: config.clone(),
                seeds: BTreeMap::new(),
                outputs: Vec::new(),
                status: RunStatus::Running,
                started_at: now(),
                finished_at: None,
            },
        };
        dir.save_manifest()?;
        Ok(dir)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    fn save_manifest(&self) -> CliResult<()> {
        write_atomic(&self.root.join(MANIFEST_FILE), &to_json_bytes(&self.manifest)?)
    }

    /// Records and returns the base seed of `label`.
    pub fn seed(&mut self, label: &str) -> RandomSeed {
        let s = derive_seed(self.manifest.config.seed, label, 0);
        self.manifest.seeds.insert(label.into(), s);
        s
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        write_atomic(&self.root.join(name), bytes)?;
        if !self.manifest.outputs.iter().any(|o| o == name) {
            self.manifest.outputs.push(name.into());
        }
        self.save_manifest()
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let bytes = to_json_bytes(value)?;
        self.write_bytes(name, &bytes)
    }

    /// Renders a CSV into memory with `render`, then writes it atomically.
    pub fn write_csv<F>(&mut self, name: &str, render: F) -> CliResult<()>
    where
        F: FnOnce(&mut Vec<u8>) -> CliResult<()>,
    {
        let mut buf = Vec::new();
        render(&mut buf)?;
        self.write_bytes(name, &buf)
    }

    pub fn finish(mut self, passed: bool) -> CliResult<RunManifest> {
        self.manifest.status = if passed {
            RunStatus::Passed
        } else {
            RunStatus::Failed
        };
        self.manifest.finished_at = Some(now());
        self.save_manifest()?;
        Ok(self.manifest)
    }
}

/// CSV writer with LF line endings.
pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}
