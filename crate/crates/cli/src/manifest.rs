//! The run manifest written beside every output artifact.

use std::path::Path;
use std::time::Instant;

use dol_core::ingest::{dold_payload_bytes, fnv1a64};
use dol_core::{Dataset, Result};

#[derive(Debug, serde::Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub library_version: String,
    /// 64-bit FNV-1a over the dataset's DOLD payload bytes, when a dataset
    /// was involved.
    pub dataset_checksum: Option<String>,
    pub wall_clock_seconds: f64,
}

pub fn dataset_checksum(ds: &Dataset) -> String {
    format!("{:016x}", fnv1a64(&dold_payload_bytes(ds)))
}

/// Writes `<out>.manifest.json` unless suppressed.
pub fn write_manifest(
    out_path: &Path,
    argv: &[String],
    config: serde_json::Value,
    seed: Option<u64>,
    checksum: Option<String>,
    started: Instant,
    suppress: bool,
) -> Result<()> {
    if suppress {
        return Ok(());
    }
    let manifest = RunManifest {
        command_line: argv.to_vec(),
        config,
        seed,
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        dataset_checksum: checksum,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    let mut name = out_path.as_os_str().to_os_string();
    name.push(".manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(Path::new(&name), text)?;
    Ok(())
}
