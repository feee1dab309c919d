//! Output directory handling and the per-run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::CliResult;

/// Everything a finished run records next to its outputs: the configuration
/// it resolved to (defaults filled in), the software version, wall-clock
/// time, and an index of every emitted file.
#[derive(Serialize)]
struct RunManifest<'a, C: Serialize> {
    experiment: &'a str,
    version: &'a str,
    config: &'a C,
    wall_clock_seconds: f64,
    outputs: Vec<String>,
}

/// A run's output directory. Files are registered as they are written so
/// the closing manifest can list all of them.
pub struct OutDir {
    root: PathBuf,
    files: Vec<String>,
    started: Instant,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<OutDir> {
        std::fs::create_dir_all(root)
            .map_err(|e| format!("cannot create output directory {}: {e}", root.display()))?;
        Ok(OutDir { root: root.to_path_buf(), files: Vec::new(), started: Instant::now() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Write a file and record it in the manifest index.
    pub fn write_file(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, contents)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Record a file created by another component at `self.path(name)`.
    pub fn register_file(&mut self, name: &str) {
        self.files.push(name.to_string());
    }

    /// Record files created under `subdir` by other components (for example
    /// a state archive), relative to the run directory.
    pub fn register_tree(&mut self, subdir: &str) -> CliResult<()> {
        let mut found = Vec::new();
        collect_files(&self.root.join(subdir), Path::new(subdir), &mut found)?;
        found.sort();
        self.files.extend(found);
        Ok(())
    }

    /// Write `manifest.json` and consume the directory handle.
    pub fn finish<C: Serialize>(mut self, experiment: &str, config: &C) -> CliResult<()> {
        self.files.push("manifest.json".to_string());
        let manifest = RunManifest {
            experiment,
            version: env!("CARGO_PKG_VERSION"),
            config,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.files,
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(self.root.join("manifest.json"), text)?;
        Ok(())
    }
}

fn collect_files(dir: &Path, rel: &Path, into: &mut Vec<String>) -> CliResult<()> {
    for entry in std::fs::read_dir(dir)
        .map_err(|e| format!("cannot index output tree {}: {e}", dir.display()))?
    {
        let entry = entry?;
        let rel_child = rel.join(entry.file_name());
        if entry.file_type()?.is_dir() {
            collect_files(&entry.path(), &rel_child, into)?;
        } else {
            into.push(rel_child.to_string_lossy().into_owned());
        }
    }
    Ok(())
}

/// Render rows of already-formatted cells under a header line. Floats are
/// formatted with the shortest representation that parses back exactly, so
/// rerunning a configuration reproduces the file byte for byte.
pub fn csv(header: &str, rows: &[Vec<String>]) -> String {
    let mut text = String::with_capacity(rows.len() * 32 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        let mut sep = "";
        for cell in row {
            let _ = write!(text, "{sep}{cell}");
            sep = ",";
        }
        text.push('\n');
    }
    text
}

/// Shortest round-trip decimal form of a float (CSV cell).
pub fn num(v: f64) -> String {
    format!("{v}")
}
