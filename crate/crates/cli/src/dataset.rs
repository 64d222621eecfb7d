//! CSV datasets with a JSON provenance sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha1::{Digest, Sha1};

use crate::config::SweepConfig;
use crate::CliError;

pub const DATASET_VERSION: u32 = 1;

/// In-memory CSV table written in one go so that row order is deterministic.
pub struct Dataset {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Dataset {
    pub fn new(header: &[&'static str]) -> Self {
        Dataset {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(CliError::from_csv)?;
        for row in &self.rows {
            w.write_record(row).map_err(CliError::from_csv)?;
        }
        w.into_inner().map_err(|e| CliError::io(e.to_string()))
    }

    /// Writes `<dir>/<name>.csv` and `<dir>/<name>.json`; returns the CSV path.
    pub fn write(&self, dir: &Path, name: &str, command: &str, config: &SweepConfig) -> Result<PathBuf, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}: {e}", dir.display())))?;
        let bytes = self.to_bytes()?;
        let csv_path = dir.join(format!("{name}.csv"));
        fs::write(&csv_path, &bytes).map_err(|e| CliError::io(format!("writing {}: {e}", csv_path.display())))?;

        let sidecar = Sidecar {
            artifact: env!("CARGO_PKG_NAME"),
            artifact_version: env!("CARGO_PKG_VERSION"),
            dataset_version: DATASET_VERSION,
            command,
            dataset: format!("{name}.csv"),
            content_hash: git_blob_hash(&bytes),
            rows: self.rows.len(),
            config,
        };
        let json_path = dir.join(format!("{name}.json"));
        let text = serde_json::to_string_pretty(&sidecar).map_err(|e| CliError::io(e.to_string()))?;
        fs::write(&json_path, text + "\n").map_err(|e| CliError::io(format!("writing {}: {e}", json_path.display())))?;
        Ok(csv_path)
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    artifact: &'static str,
    artifact_version: &'static str,
    dataset_version: u32,
    command: &'a str,
    dataset: String,
    content_hash: String,
    rows: usize,
    config: &'a SweepConfig,
}

/// SHA-1 over `blob <len>\0<content>`, as `git hash-object` computes it.
pub fn git_blob_hash(content: &[u8]) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Shortest round-trip representation.
pub fn num(x: f64) -> String {
    format!("{x}")
}
