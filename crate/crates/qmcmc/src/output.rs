//! Run directories: resolved config, manifest, and CSV files.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::{HarnessError, Result};

pub const RESOLVED_CONFIG: &str = "config.resolved.json";
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub qmcmc_version: String,
    pub core_version: String,
    /// Data rows per CSV file.
    pub files: BTreeMap<String, usize>,
    pub failures: usize,
    pub threads: usize,
    pub wall_time_seconds: f64,
}

#[derive(Debug)]
pub struct RunDir {
    path: PathBuf,
    command: String,
    threads: usize,
    files: BTreeMap<String, usize>,
    failures: usize,
    started: Instant,
}

impl RunDir {
    pub fn create(path: impl Into<PathBuf>, command: &str, config: &ExperimentConfig, threads: usize) -> Result<Self> {
        let path = path.into();
        fs::create_dir_all(&path).map_err(HarnessError::io(&path))?;
        let resolved = path.join(RESOLVED_CONFIG);
        let text = serde_json::to_string_pretty(config)?;
        fs::write(&resolved, text + "\n").map_err(HarnessError::io(&resolved))?;
        Ok(Self {
            path,
            command: command.into(),
            threads,
            files: BTreeMap::new(),
            failures: 0,
            started: Instant::now(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn record(&mut self, name: &str, rows: usize) {
        self.files.insert(name.into(), rows);
    }

    pub fn add_failures(&mut self, count: usize) {
        self.failures += count;
    }

    pub fn failures(&self) -> usize {
        self.failures
    }

    pub fn finish(self) -> Result<Manifest> {
        let manifest = Manifest {
            command: self.command,
            qmcmc_version: env!("CARGO_PKG_VERSION").into(),
            core_version: qmcmc_core::VERSION.into(),
            files: self.files,
            failures: self.failures,
            threads: self.threads,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
        };
        let path = self.path.join(MANIFEST);
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(HarnessError::io(&path))?;
        Ok(manifest)
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(HarnessError::io(&path))?;
    Ok(serde_json::from_str(&text)?)
}

/// All rows of a CSV file; empty when the file does not exist.
pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut reader = csv::Reader::from_path(path)?;
    reader.deserialize().map(|row| row.map_err(HarnessError::from)).collect()
}

/// Replaces `path` with a header plus `rows`.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    {
        let mut writer = csv::Writer::from_path(&tmp)?;
        for row in rows {
            writer.serialize(row)?;
        }
        writer.flush().map_err(HarnessError::io(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(HarnessError::io(path))
}

/// Appends batches of rows, flushing after each batch.
pub struct Appender {
    writer: csv::Writer<File>,
    path: PathBuf,
}

impl Appender {
    /// Opens `path` for appending; `header` is written when the file is new.
    pub fn open(path: &Path, header: bool) -> Result<Self> {
        let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(HarnessError::io(path))?;
        let writer = csv::WriterBuilder::new().has_headers(header && fresh).from_writer(file);
        Ok(Self { writer, path: path.to_path_buf() })
    }

    pub fn append<T: Serialize>(&mut self, rows: &[T]) -> Result<()> {
        for row in rows {
            self.writer.serialize(row)?;
        }
        self.writer.flush().map_err(HarnessError::io(&self.path))
    }
}
