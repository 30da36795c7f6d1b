//! Experiment runner: reproducible configurations, seeded replicas, CSV and
//! manifest outputs, and pass/fail verdicts against fixed thresholds.

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod report;

use std::path::Path;

pub use config::{validate_config, Experiment, ExperimentConfig, ValidatedConfig};
pub use report::{Check, Report};

/// Run one experiment, writing CSVs and a manifest under `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> currents::Result<Report> {
    let validated = validate_config(cfg)?;
    let started = std::time::Instant::now();
    let started_unix_ms = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    std::fs::create_dir_all(out_dir).map_err(|e| {
        currents::CoreError::InvalidParams(format!("cannot create {}: {e}", out_dir.display()))
    })?;
    let mut report = Report::new(cfg.experiment, out_dir);
    report.warnings = validated.warnings.clone();
    match cfg.experiment {
        Experiment::Kernels => experiments::kernels::run(&validated, &mut report)?,
        Experiment::Stationary => experiments::stationary::run(&validated, &mut report)?,
        Experiment::Converge => experiments::converge::run(&validated, &mut report)?,
        Experiment::Hydro => experiments::hydro::run(&validated, &mut report)?,
        Experiment::Couple => experiments::couple::run(&validated, &mut report)?,
        Experiment::Masswalk => experiments::masswalk::run(&validated, &mut report)?,
        Experiment::Critical => experiments::critical::run(&validated, &mut report)?,
        Experiment::Subcritical => experiments::subcritical::run(&validated, &mut report)?,
    }
    manifest::write_manifest(cfg, &mut report, started_unix_ms, started.elapsed())?;
    Ok(report)
}
