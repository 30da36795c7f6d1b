//! Experiment configuration: JSON schema, defaults, validation.

use currents::kernels::Grid;
use currents::lattice::LatticeParams;
use currents::profile::ProfileSpec;
use currents::{CoreError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    /// Green-function identities: conservation, representation cross-check,
    /// semigroup, resolvent.
    Kernels,
    /// Stationary fixed points and their small-step linear limits.
    Stationary,
    /// Barrier squeeze, invariance of linear profiles, convergence to them.
    Converge,
    /// Monte Carlo check of the hydrodynamic suffix-mass comparison.
    Hydro,
    /// Two-process coupling: discrepancy decay and the L1 bound.
    Couple,
    /// Mass marginal of the full simulator against the standalone walk.
    Masswalk,
    /// Rescaled mass at the long horizon against the folded normal.
    Critical,
    /// Profile shape at intermediate horizons.
    Subcritical,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Kernels => "kernels",
            Experiment::Stationary => "stationary",
            Experiment::Converge => "converge",
            Experiment::Hydro => "hydro",
            Experiment::Couple => "couple",
            Experiment::Masswalk => "masswalk",
            Experiment::Critical => "critical",
            Experiment::Subcritical => "subcritical",
        }
    }
}

fn default_j() -> f64 {
    1.0
}

fn default_grid_m() -> usize {
    400
}

fn default_ladder() -> Vec<f64> {
    vec![1e-2, 3e-3, 1e-3]
}

fn default_tail_tol() -> f64 {
    1e-9
}

/// One experiment run, fully described. Unset fields fall back to the
/// experiment's documented defaults during validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Replica streams derive from this; identical seeds give bytewise
    /// identical outputs.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_j")]
    pub j: f64,
    /// Inverse system size 1/eps must be an integer.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Total macroscopic mass (builds the linear initial profile unless
    /// `profile` is given).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSpec>,
    /// Macroscopic horizon; the microscopic scale depends on the experiment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[serde(default = "default_grid_m")]
    pub grid_m: usize,
    #[serde(default = "default_ladder")]
    pub delta_ladder: Vec<f64>,
    /// Fixed truncation edge for the stationary experiment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_edge: Option<f64>,
    /// Edges for the monotonicity scan.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_values: Option<Vec<f64>>,
    /// Layer coefficient for the shrinking-edge mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_a: Option<f64>,
    /// Observation times (meaning depends on the experiment).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    /// Run the KS null calibration alongside the masswalk comparison.
    #[serde(default)]
    pub calibrate_oracle: bool,
    /// Named thresholds; anything not set here uses the documented default.
    #[serde(default)]
    pub thresholds: BTreeMap<String, f64>,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            seed: 0,
            j: default_j(),
            eps: None,
            mass: None,
            profile: None,
            horizon_t: None,
            replicas: None,
            grid_m: default_grid_m(),
            delta_ladder: default_ladder(),
            r_edge: None,
            r_values: None,
            edge_a: None,
            times: None,
            tail_tol: default_tail_tol(),
            calibrate_oracle: false,
            thresholds: BTreeMap::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CoreError::InvalidParams(format!("config: {e}")))
    }

    pub fn threshold(&self, name: &str, default: f64) -> f64 {
        self.thresholds.get(name).copied().unwrap_or(default)
    }
}

/// A validated configuration with concrete parameters filled in.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    pub cfg: ExperimentConfig,
    pub grid: Grid,
    /// Lattice parameters for particle experiments.
    pub lattice: Option<LatticeParams>,
    pub warnings: Vec<String>,
}

impl ValidatedConfig {
    pub fn lattice(&self) -> LatticeParams {
        self.lattice.expect("validated particle experiment carries lattice params")
    }
}

fn err(field: &str, msg: String) -> CoreError {
    CoreError::InvalidParams(format!("{field}: {msg}"))
}

/// Check field consistency, fill defaults, and refine the grid when a ladder
/// step is too small for it.
pub fn validate_config(raw: &ExperimentConfig) -> Result<ValidatedConfig> {
    let mut cfg = raw.clone();
    let mut warnings = Vec::new();
    if !(cfg.j > 0.0) || !cfg.j.is_finite() {
        return Err(err("j", format!("must be positive, got {}", cfg.j)));
    }
    if let Some(mass) = cfg.mass {
        if !(mass >= 0.0) || !mass.is_finite() {
            return Err(err("mass", format!("must be non-negative, got {mass}")));
        }
    }
    if let Some(profile) = &cfg.profile {
        profile.validate()?;
    }
    for &d in &cfg.delta_ladder {
        if !(d > 0.0 && d < 1.0) {
            return Err(err("delta_ladder", format!("steps must lie in (0,1), got {d}")));
        }
    }
    if cfg.grid_m < 2 {
        return Err(err("grid_m", format!("needs at least 2 cells, got {}", cfg.grid_m)));
    }

    let uses_lattice = matches!(
        cfg.experiment,
        Experiment::Hydro
            | Experiment::Couple
            | Experiment::Masswalk
            | Experiment::Critical
            | Experiment::Subcritical
    );
    let uses_ladder = matches!(cfg.experiment, Experiment::Stationary);

    // experiment defaults
    match cfg.experiment {
        Experiment::Kernels => {}
        Experiment::Stationary => {
            cfg.r_edge.get_or_insert(0.5);
            cfg.r_values.get_or_insert(vec![0.3, 0.5, 0.7]);
            cfg.edge_a.get_or_insert(1.0);
            let r = cfg.r_edge.unwrap();
            if !(r > 0.0 && r < 1.0) {
                return Err(err("r_edge", format!("must lie in (0,1), got {r}")));
            }
            let a = cfg.edge_a.unwrap();
            if !(a > 0.0) {
                return Err(err("edge_a", format!("must be positive, got {a}")));
            }
        }
        Experiment::Converge => {
            cfg.mass.get_or_insert(0.5);
            cfg.horizon_t.get_or_insert(0.5);
            cfg.times.get_or_insert(vec![0.5, 1.0, 2.0, 4.0]);
        }
        Experiment::Hydro => {
            cfg.eps.get_or_insert(1.0 / 200.0);
            cfg.mass.get_or_insert(0.5);
            cfg.horizon_t.get_or_insert(0.5);
            cfg.replicas.get_or_insert(20);
        }
        Experiment::Couple => {
            cfg.eps.get_or_insert(1.0 / 100.0);
            cfg.mass.get_or_insert(0.5);
            cfg.replicas.get_or_insert(100);
            cfg.times.get_or_insert(vec![0.5, 1.0, 2.0]);
        }
        Experiment::Masswalk => {
            cfg.eps.get_or_insert(1.0 / 50.0);
            cfg.mass.get_or_insert(1.0);
            cfg.horizon_t.get_or_insert(1.0);
            cfg.replicas.get_or_insert(500);
        }
        Experiment::Critical => {
            cfg.eps.get_or_insert(1.0 / 50.0);
            cfg.mass.get_or_insert(1.0);
            cfg.horizon_t.get_or_insert(1.0);
            cfg.replicas.get_or_insert(200);
        }
        Experiment::Subcritical => {
            cfg.eps.get_or_insert(1.0 / 50.0);
            cfg.mass.get_or_insert(1.0);
            cfg.replicas.get_or_insert(20);
        }
    }

    let lattice = if uses_lattice {
        let eps = cfg.eps.expect("defaults filled above");
        Some(LatticeParams::from_eps(eps, cfg.j)?)
    } else {
        None
    };

    if let Some(replicas) = cfg.replicas {
        let min = match cfg.experiment {
            Experiment::Couple | Experiment::Critical => 100,
            Experiment::Masswalk => 100,
            _ => 1,
        };
        if replicas < min {
            return Err(err(
                "replicas",
                format!(
                    "{} needs at least {min} replicas for its statistics, got {replicas}",
                    cfg.experiment.name()
                ),
            ));
        }
    }

    // grid refinement: the kernel width must be resolved by the cells
    let mut m = cfg.grid_m;
    if uses_ladder {
        let min_delta = cfg
            .delta_ladder
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let needed = (2.0 / min_delta.sqrt()).ceil() as usize;
        if m < needed {
            warnings.push(format!(
                "grid_m {m} does not resolve sqrt(delta) = {:.3e}; refined to {needed}",
                min_delta.sqrt()
            ));
            m = needed;
        }
    }
    cfg.grid_m = m;
    let grid = Grid::new(m)?;

    Ok(ValidatedConfig {
        cfg,
        grid,
        lattice,
        warnings,
    })
}
