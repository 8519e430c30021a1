use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::scenarios::{RunError, RunOutput, Summary};

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest<C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub library_version: &'static str,
    pub config: C,
    pub files: Vec<FileEntry>,
}

impl<C: Serialize> Manifest<C> {
    pub fn new(config: C, files: Vec<FileEntry>) -> Self {
        Self {
            tool: "bsosim",
            version: env!("CARGO_PKG_VERSION"),
            library_version: bsosim::VERSION,
            config,
            files,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| RunError::Io(e.to_string()))?;
        text.push('\n');
        fs::write(dir.join("manifest.json"), text)?;
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One-row CSV of the run's scalar results.
pub fn summary_csv(summary: &Summary) -> Vec<u8> {
    let mut buf = Vec::new();
    let names: Vec<&str> = summary.iter().map(|(k, _)| *k).collect();
    let values: Vec<f64> = summary.iter().map(|(_, v)| *v).collect();
    bsosim::csv::write_header(&mut buf, &names).expect("writing to memory");
    bsosim::csv::write_row(&mut buf, &values).expect("writing to memory");
    buf
}

/// Writes every file of `out`, `summary.csv` and the manifest into `dir`;
/// returns the manifest entries.
pub fn write_run<C: Serialize>(dir: &Path, config: C, out: &RunOutput) -> Result<Vec<FileEntry>, RunError> {
    fs::create_dir_all(dir)?;
    let summary = summary_csv(&out.summary);
    let files = out.files.iter().map(|(n, b)| (n.as_str(), b.as_slice()));
    let mut entries = Vec::new();
    for (name, bytes) in files.chain([("summary.csv", summary.as_slice())]) {
        fs::write(dir.join(name), bytes)?;
        entries.push(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
    }
    Manifest::new(config, entries.clone()).write(dir)?;
    Ok(entries)
}
