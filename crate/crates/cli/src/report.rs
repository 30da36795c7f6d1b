//! Checks, CSV output, and the run report.

use crate::config::Experiment;
use currents::{CoreError, Result};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Direction of a threshold comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    LessEq,
    GreaterEq,
    IsTrue,
}

/// One named verdict. Gating checks decide the exit status; informational
/// ones are recorded but do not.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub op: Op,
    pub pass: bool,
    pub gate: bool,
}

impl Check {
    pub fn less_eq(name: &str, value: f64, threshold: f64) -> Check {
        Check {
            name: name.to_string(),
            value,
            threshold,
            op: Op::LessEq,
            pass: value <= threshold,
            gate: true,
        }
    }

    pub fn greater_eq(name: &str, value: f64, threshold: f64) -> Check {
        Check {
            name: name.to_string(),
            value,
            threshold,
            op: Op::GreaterEq,
            pass: value >= threshold,
            gate: true,
        }
    }

    pub fn is_true(name: &str, ok: bool) -> Check {
        Check {
            name: name.to_string(),
            value: if ok { 1.0 } else { 0.0 },
            threshold: 1.0,
            op: Op::IsTrue,
            pass: ok,
            gate: true,
        }
    }

    pub fn info(mut self) -> Check {
        self.gate = false;
        self
    }

    pub fn summary_line(&self) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        let role = if self.gate { "" } else { " (info)" };
        let rel = match self.op {
            Op::LessEq => "<=",
            Op::GreaterEq => ">=",
            Op::IsTrue => "==",
        };
        format!(
            "[{tag}]{role} {}: {:.4e} {rel} {:.4e}",
            self.name, self.value, self.threshold
        )
    }
}

/// Everything one run produced.
#[derive(Debug)]
pub struct Report {
    pub experiment: Experiment,
    pub out_dir: PathBuf,
    pub checks: Vec<Check>,
    /// Relative file names written so far.
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(experiment: Experiment, out_dir: &Path) -> Report {
        Report {
            experiment,
            out_dir: out_dir.to_path_buf(),
            checks: Vec::new(),
            outputs: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    /// All gating checks pass.
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass || !c.gate)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Write a CSV with a header row and a units comment line. Rows are
    /// formatted by the caller; floats use shortest-roundtrip formatting so
    /// identical runs produce identical bytes.
    pub fn write_csv(
        &mut self,
        file: &str,
        header: &str,
        units: &str,
        rows: impl IntoIterator<Item = String>,
    ) -> Result<()> {
        let mut text = String::new();
        let _ = writeln!(text, "{header}");
        let _ = writeln!(text, "# units: {units}");
        for row in rows {
            let _ = writeln!(text, "{row}");
        }
        let path = self.out_dir.join(file);
        std::fs::write(&path, text)
            .map_err(|e| CoreError::InvalidParams(format!("write {}: {e}", path.display())))?;
        self.outputs.push(file.to_string());
        Ok(())
    }

    pub fn print_summary(&self) {
        for w in &self.warnings {
            println!("[WARN] {w}");
        }
        for c in &self.checks {
            println!("{}", c.summary_line());
        }
        println!(
            "{}: {}",
            self.experiment.name(),
            if self.pass() { "PASS" } else { "FAIL" }
        );
    }
}

/// Join float cells into a CSV row with stable formatting.
pub fn row(cells: &[f64]) -> String {
    cells
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(",")
}
