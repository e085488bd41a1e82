//! Stage output directories and their manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    #[serde(default)]
    pub details: Value,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Clone, Copy)]
pub enum Kind {
    /// Header line plus one line per row.
    Csv,
    /// One row per line.
    Lines,
    /// A single document.
    Json,
}

fn row_count(bytes: &[u8], kind: Kind) -> usize {
    let lines = bytes.iter().filter(|&&b| b == b'\n').count();
    match kind {
        Kind::Csv => lines.saturating_sub(1),
        Kind::Lines => lines,
        Kind::Json => 1,
    }
}

/// Collects the files written by one command under `<out>/<stage>/`.
pub struct StageWriter {
    dir: PathBuf,
    stage: String,
    files: Vec<FileEntry>,
}

impl StageWriter {
    /// Empties and recreates the stage directory.
    pub fn create(out: &Path, stage: &str) -> Result<Self, CliError> {
        let dir = out.join(stage);
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        Ok(StageWriter {
            dir,
            stage: stage.to_string(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8], kind: Kind) -> Result<(), CliError> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| io_error(&path, e))?;
        self.files.push(FileEntry {
            path: rel.to_string(),
            rows: row_count(bytes, kind),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(rel, &bytes, Kind::Json)
    }

    /// Writes `manifest.json`, listing files in path order.
    pub fn finish(mut self, details: Value) -> Result<Manifest, CliError> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            stage: self.stage.clone(),
            details,
            files: self.files.clone(),
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        let path = self.dir.join(MANIFEST);
        fs::write(&path, bytes).map_err(|e| io_error(&path, e))?;
        Ok(manifest)
    }
}

pub fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::usage(format!("{}: {e}", path.display()))
}

/// Reads a previous stage's manifest; a missing one means that stage has
/// not been run.
pub fn read_manifest(out: &Path, stage: &str, command: &str) -> Result<Manifest, CliError> {
    let path = out.join(stage).join(MANIFEST);
    let text = fs::read_to_string(&path)
        .map_err(|_| CliError::usage(format!("{} not found; run `{command}` first", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_stage_file(out: &Path, stage: &str, rel: &str) -> Result<Vec<u8>, CliError> {
    let path = out.join(stage).join(rel);
    fs::read(&path).map_err(|e| io_error(&path, e))
}
