//! Macroscopic density profiles on `[0, 1]`.
//!
//! The invariant family is linear with slope `-2j`: for mass `M < j` the
//! profile is `2j(R - r)` supported on `[0, R]` with `R = sqrt(M/j)`, for
//! `M >= j` it is `M + j - 2jr` on all of `[0, 1]`. Arbitrary initial
//! profiles are described by [`ProfileSpec`].

use crate::error::{CoreError, Result};
use crate::quad::adaptive_simpson;
use serde::{Deserialize, Serialize};

/// Edge of the linear profile with mass `m` when it has one (`m <= j`).
pub fn linear_edge(m: f64, j: f64) -> Option<f64> {
    if m <= j {
        Some((m / j).sqrt())
    } else {
        None
    }
}

/// Pointwise value of the linear profile with total mass `m` and current `j`.
pub fn linear_density(m: f64, j: f64, r: f64) -> f64 {
    debug_assert!(m >= 0.0 && j > 0.0);
    if m < j {
        let edge = (m / j).sqrt();
        if r <= edge {
            2.0 * j * (edge - r)
        } else {
            0.0
        }
    } else {
        m + j - 2.0 * j * r
    }
}

/// Exact integral of the linear profile over `[a, b] ⊆ [0, 1]`.
pub fn linear_cell_integral(m: f64, j: f64, a: f64, b: f64) -> f64 {
    if m < j {
        let edge = (m / j).sqrt();
        let ca = (edge - a).max(0.0);
        let cb = (edge - b).max(0.0);
        j * (ca * ca - cb * cb)
    } else {
        (m + j) * (b - a) - j * (b * b - a * a)
    }
}

/// Suffix mass of the linear profile: integral over `[r, 1]`.
pub fn linear_suffix_mass(m: f64, j: f64, r: f64) -> f64 {
    linear_cell_integral(m, j, r.clamp(0.0, 1.0), 1.0)
}

/// An initial macroscopic profile, loadable from JSON
/// (`{"kind": "uniform" | "linear" | "table", ...}`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProfileSpec {
    /// Constant density `mass` on `[0, 1]`.
    Uniform { mass: f64 },
    /// The invariant linear profile with the given mass (needs the current).
    Linear { mass: f64, j: f64 },
    /// Piecewise-linear interpolation of `(r, value)` pairs covering `[0, 1]`.
    Table { points: Vec<(f64, f64)> },
}

impl ProfileSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ProfileSpec =
            serde_json::from_str(text).map_err(|e| CoreError::InvalidProfile(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProfileSpec::Uniform { mass } => {
                if !mass.is_finite() || *mass < 0.0 {
                    return Err(CoreError::InvalidProfile(format!(
                        "uniform mass must be non-negative, got {mass}"
                    )));
                }
            }
            ProfileSpec::Linear { mass, j } => {
                if !mass.is_finite() || *mass < 0.0 {
                    return Err(CoreError::InvalidProfile(format!(
                        "linear mass must be non-negative, got {mass}"
                    )));
                }
                if !j.is_finite() || *j <= 0.0 {
                    return Err(CoreError::InvalidProfile(format!(
                        "current j must be positive, got {j}"
                    )));
                }
            }
            ProfileSpec::Table { points } => {
                if points.len() < 2 {
                    return Err(CoreError::InvalidProfile(
                        "table needs at least two points".into(),
                    ));
                }
                if (points[0].0 - 0.0).abs() > 1e-12 || (points[points.len() - 1].0 - 1.0).abs() > 1e-12
                {
                    return Err(CoreError::InvalidProfile(
                        "table must cover [0, 1] (first r = 0, last r = 1)".into(),
                    ));
                }
                for w in points.windows(2) {
                    if w[1].0 < w[0].0 {
                        return Err(CoreError::InvalidProfile(
                            "table abscissae must be non-decreasing".into(),
                        ));
                    }
                }
                if let Some((r, v)) = points.iter().find(|(_, v)| !v.is_finite() || *v < 0.0) {
                    return Err(CoreError::InvalidProfile(format!(
                        "negative or non-finite density {v} at r = {r}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Density at `r ∈ [0, 1]`.
    pub fn density(&self, r: f64) -> f64 {
        match self {
            ProfileSpec::Uniform { mass } => *mass,
            ProfileSpec::Linear { mass, j } => linear_density(*mass, *j, r),
            ProfileSpec::Table { points } => {
                if r <= points[0].0 {
                    return points[0].1;
                }
                if r >= points[points.len() - 1].0 {
                    return points[points.len() - 1].1;
                }
                let k = points.partition_point(|&(x, _)| x <= r);
                let (x0, v0) = points[k - 1];
                let (x1, v1) = points[k];
                if x1 == x0 {
                    v1
                } else {
                    v0 + (v1 - v0) * (r - x0) / (x1 - x0)
                }
            }
        }
    }

    /// Total mass `∫_0^1 ρ`.
    pub fn total_mass(&self) -> f64 {
        match self {
            ProfileSpec::Uniform { mass } => *mass,
            ProfileSpec::Linear { mass, .. } => *mass,
            ProfileSpec::Table { .. } => adaptive_simpson(|r| self.density(r), 0.0, 1.0, 1e-12),
        }
    }

    /// Leftmost point after which the density vanishes identically, if any.
    pub fn edge(&self) -> Option<f64> {
        match self {
            ProfileSpec::Uniform { mass } => {
                if *mass == 0.0 {
                    Some(0.0)
                } else {
                    None
                }
            }
            ProfileSpec::Linear { mass, j } => {
                if *mass == 0.0 {
                    Some(0.0)
                } else {
                    linear_edge(*mass, *j)
                }
            }
            ProfileSpec::Table { points } => {
                if points[points.len() - 1].1 != 0.0 {
                    return None;
                }
                let mut edge = points[points.len() - 1].0;
                for w in points.windows(2).rev() {
                    if w[0].1 == 0.0 && w[1].1 == 0.0 {
                        edge = w[0].0;
                    } else {
                        break;
                    }
                }
                Some(edge)
            }
        }
    }
}
