//! Run manifest: config echo, environment, output hashes, verdicts.

use crate::config::ExperimentConfig;
use crate::report::Report;
use currents::{CoreError, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::time::Duration;

#[derive(Serialize)]
struct OutputEntry {
    file: String,
    sha256: String,
    bytes: u64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'static str,
    version: &'static str,
    seed: u64,
    started_unix_ms: u64,
    wall_ms: u64,
    config: &'a ExperimentConfig,
    warnings: &'a [String],
    checks: &'a [crate::report::Check],
    outputs: Vec<OutputEntry>,
    pass: bool,
}

pub fn write_manifest(
    cfg: &ExperimentConfig,
    report: &mut Report,
    started_unix_ms: u64,
    wall: Duration,
) -> Result<()> {
    let mut outputs = Vec::new();
    for file in &report.outputs {
        let path = report.out_dir.join(file);
        let data = std::fs::read(&path)
            .map_err(|e| CoreError::InvalidParams(format!("read {}: {e}", path.display())))?;
        let mut hasher = Sha256::new();
        hasher.update(&data);
        outputs.push(OutputEntry {
            file: file.clone(),
            sha256: format!("{:x}", hasher.finalize()),
            bytes: data.len() as u64,
        });
    }
    let manifest = Manifest {
        experiment: report.experiment.name(),
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        started_unix_ms,
        wall_ms: wall.as_millis() as u64,
        config: cfg,
        warnings: &report.warnings,
        checks: &report.checks,
        outputs,
        pass: report.pass(),
    };
    let path = report.out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CoreError::InvalidParams(format!("manifest: {e}")))?;
    std::fs::write(&path, text)
        .map_err(|e| CoreError::InvalidParams(format!("write {}: {e}", path.display())))?;
    Ok(())
}
