//! Per-command provenance records.
//!
//! A manifest names its inputs and outputs relative to the output directory
//! together with their SHA-256, so two runs of the same command on the same
//! inputs produce identical manifests. Wall-clock timings go to a separate
//! `<command>.timings` file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::formats::{read_text, sha256_hex, write_atomic, Report};

#[derive(Clone, Debug, PartialEq)]
pub struct FileRecord {
    pub role: String,
    pub name: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub notes: Report,
    pub timings: Vec<(String, Duration)>,
}

fn display_name(path: &Path, base: &Path) -> String {
    path.strip_prefix(base)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}

fn record(role: &str, path: &Path, base: &Path) -> Result<FileRecord> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(FileRecord {
        role: role.to_string(),
        name: display_name(path, base),
        sha256: sha256_hex(&bytes),
    })
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config.hash(),
            seed: config.seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            notes: Report::new(),
            timings: Vec::new(),
        }
    }

    pub fn input(&mut self, role: &str, path: &Path, base: &Path) -> Result<&mut Self> {
        self.inputs.push(record(role, path, base)?);
        Ok(self)
    }

    pub fn output(&mut self, role: &str, path: &Path, base: &Path) -> Result<&mut Self> {
        self.outputs.push(record(role, path, base)?);
        Ok(self)
    }

    pub fn time(&mut self, stage: &str, elapsed: Duration) {
        self.timings.push((stage.to_string(), elapsed));
    }

    pub fn to_text(&self) -> String {
        let mut r = Report::new();
        r.text("command", &self.command)
            .text("version", &self.version)
            .text("config_sha256", &self.config_hash)
            .text("seed", self.seed);
        for f in &self.inputs {
            r.text(&format!("input.{}", f.role), format!("{} {}", f.name, f.sha256));
        }
        for f in &self.outputs {
            r.text(&format!("output.{}", f.role), format!("{} {}", f.name, f.sha256));
        }
        for (k, v) in self.notes.entries() {
            r.text(k, v);
        }
        r.to_text()
    }

    /// Writes `<command>.manifest` and `<command>.timings` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.manifest", self.command));
        write_atomic(&path, self.to_text().as_bytes())?;
        let timings: String = self
            .timings
            .iter()
            .map(|(k, d)| format!("{k}_s = {:.6}\n", d.as_secs_f64()))
            .collect();
        write_atomic(&dir.join(format!("{}.timings", self.command)), timings.as_bytes())?;
        Ok(path)
    }
}

/// Checks that every output listed in a manifest exists with the recorded hash.
pub fn verify(manifest_path: &Path) -> Result<()> {
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let report = Report::parse(manifest_path, &read_text(manifest_path)?)?;
    for (k, v) in report.entries() {
        if !k.starts_with("output.") {
            continue;
        }
        let (name, hash) = v.rsplit_once(' ').ok_or_else(|| CliError::Format {
            path: manifest_path.to_path_buf(),
            line: 0,
            message: format!("malformed entry `{k}`"),
        })?;
        let actual = record("", &dir.join(name), dir)?;
        if actual.sha256 != hash {
            return Err(CliError::Format {
                path: manifest_path.to_path_buf(),
                line: 0,
                message: format!("{name} does not match its recorded hash"),
            });
        }
    }
    Ok(())
}
