//! Outputs are buffered in memory and committed together, so a failed run
//! leaves no artifacts behind. Every run writes a manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), bytes.into()));
    }

    pub fn add_json(&mut self, name: &str, v: &serde_json::Value) {
        let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
        s.push('\n');
        self.add(name, s);
    }
}

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes all files, each via a temporary name and rename. On failure
/// every file already placed is removed again.
pub fn commit(dir: &Path, out: &Outputs) -> Result<Vec<FileEntry>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("{}: {e}", dir.display())))?;
    let mut placed: Vec<PathBuf> = Vec::new();
    let result = (|| {
        let mut entries = Vec::new();
        for (name, bytes) in &out.files {
            let target = dir.join(name);
            let tmp = dir.join(format!(".{name}.partial"));
            fs::write(&tmp, bytes).map_err(|e| CliError::Internal(format!("{}: {e}", tmp.display())))?;
            fs::rename(&tmp, &target).map_err(|e| CliError::Internal(format!("{}: {e}", target.display())))?;
            placed.push(target);
            entries.push(FileEntry {
                name: name.clone(),
                bytes: bytes.len(),
                sha256: sha256_hex(bytes),
            });
        }
        Ok(entries)
    })();
    if result.is_err() {
        for p in placed {
            let _ = fs::remove_file(p);
        }
    }
    result
}

pub struct RunInfo<'a> {
    pub command: &'a str,
    pub config_sha256: String,
    pub overrides: serde_json::Value,
    pub threads: usize,
    pub started: SystemTime,
    pub timer: Instant,
}

/// `manifest_<command>.json`, written for successful and failed runs alike.
pub fn write_manifest(
    dir: &Path,
    info: &RunInfo,
    status: &str,
    exit_code: i32,
    error: Option<String>,
    files: &[FileEntry],
) -> Result<(), CliError> {
    let m = json!({
        "tool": "slowpush",
        "version": env!("CARGO_PKG_VERSION"),
        "command": info.command,
        "status": status,
        "exit_code": exit_code,
        "error": error,
        "config_sha256": info.config_sha256,
        "overrides": info.overrides,
        "threads": info.threads,
        "started_unix_s": info.started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
        "wall_clock_s": info.timer.elapsed().as_secs_f64(),
        "files": files,
    });
    fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("{}: {e}", dir.display())))?;
    let path = dir.join(format!("manifest_{}.json", info.command));
    let mut s = serde_json::to_string_pretty(&m).expect("json values serialize");
    s.push('\n');
    fs::write(&path, s).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}
