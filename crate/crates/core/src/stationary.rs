//! Stationary profiles of the lower barrier evolution and their `δ → 0`
//! limits.
//!
//! The fixed point of one smooth-then-cut step with edge `R` solves
//! `ρ = jδ g⁰_δ(0, ·) + g⁰_δ ρ` with the truncated kernel, and is computed
//! here as the accumulated series `jδ Σ_n (g⁰_δ)^{n+1}(0, ·)`. The escape of
//! mass past `R` makes the iteration geometric; the measured per-step mass
//! ratio drives the stopping rule. As `δ → 0` the profile approaches
//! `2j(R - r)` for a fixed edge `R < 1`, and `2j(1 - r) + j/A` when the
//! edge sits at `1 - Aδ`.

use crate::barriers::MeasureU;
use crate::error::{CoreError, Result};
use crate::kernels::{Grid, KernelCache};
use crate::profile::linear_density;

/// Where the truncation edge sits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeMode {
    /// Fixed edge `R ∈ (0, 1)`.
    Fixed(f64),
    /// Edge at `1 - A·δ` (shrinking absorption layer).
    Layer(f64),
}

/// Parameters of one stationary-profile computation.
#[derive(Debug, Clone, Copy)]
pub struct StationarySpec {
    pub edge: EdgeMode,
    pub delta: f64,
    pub j: f64,
    /// Stopping tolerance for the geometric tail estimate (sup norm).
    pub tail_tol: f64,
}

impl StationarySpec {
    pub fn new(edge: EdgeMode, delta: f64, j: f64, tail_tol: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(CoreError::InvalidParams(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        if !(j > 0.0) {
            return Err(CoreError::InvalidParams(format!("j must be positive, got {j}")));
        }
        if !(tail_tol > 0.0) {
            return Err(CoreError::InvalidParams(
                "tail tolerance must be positive".into(),
            ));
        }
        let r = match edge {
            EdgeMode::Fixed(r) => {
                if !(r > 0.0 && r < 1.0) {
                    return Err(CoreError::InvalidParams(format!(
                        "fixed edge must lie in (0, 1), got {r}"
                    )));
                }
                r
            }
            EdgeMode::Layer(a) => {
                if !(a > 0.0) {
                    return Err(CoreError::InvalidParams(format!(
                        "layer coefficient must be positive, got {a}"
                    )));
                }
                let r = 1.0 - a * delta;
                if !(r > 0.0) {
                    return Err(CoreError::InvalidParams(format!(
                        "layer 1 - A·δ = {r} leaves no interior"
                    )));
                }
                r
            }
        };
        debug_assert!(r > 0.0 && r < 1.0);
        Ok(StationarySpec {
            edge,
            delta,
            j,
            tail_tol,
        })
    }

    pub fn radius(&self) -> f64 {
        match self.edge {
            EdgeMode::Fixed(r) => r,
            EdgeMode::Layer(a) => 1.0 - a * self.delta,
        }
    }

    /// Whether the grid resolves the kernel width (√δ ≥ 2h).
    pub fn grid_resolves(&self, grid: Grid) -> bool {
        self.delta.sqrt() >= 2.0 * grid.h()
    }
}

/// The computed stationary density (the fixed point's density part; the
/// full fixed point is `jδ·D_0` plus this).
#[derive(Debug, Clone)]
pub struct StationaryProfile {
    grid: Grid,
    /// Average over `cell ∩ [0, R]` per cell (zero beyond the edge).
    values: Vec<f64>,
    /// Clipped cell widths.
    widths: Vec<f64>,
    pub spec: StationarySpec,
    pub iterations: usize,
    /// Sup norm of the first neglected series term: equals the fixed-point
    /// residual by telescoping.
    pub residual_sup: f64,
    /// Measured per-step mass ratio at stopping time.
    pub escape_ratio: f64,
}

impl StationaryProfile {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Native (undiluted) cell values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.widths)
            .map(|(v, w)| v * w)
            .sum()
    }

    /// Density value at `r`, reading the average over the clipped cell that
    /// contains it (so a partially covered edge cell is not diluted).
    pub fn value_at(&self, r: f64) -> f64 {
        if r < 0.0 || r > self.spec.radius() {
            return 0.0;
        }
        let m = self.grid.m();
        let k = ((r / self.grid.h()) as usize).min(m - 1);
        self.values[k]
    }

    /// Value in the cell containing the edge.
    pub fn edge_value(&self) -> f64 {
        self.value_at(self.spec.radius() * (1.0 - 1e-12))
    }

    /// As a uniform-cell density (edge cell diluted to a full-cell average),
    /// suitable for building a `MeasureU`.
    pub fn to_uniform_values(&self) -> Vec<f64> {
        let h = self.grid.h();
        self.values
            .iter()
            .zip(&self.widths)
            .map(|(v, w)| v * w / h)
            .collect()
    }

    /// The fixed-point state `jδ·D_0 + ρ`.
    pub fn to_measure(&self) -> Result<MeasureU> {
        MeasureU::new(
            self.grid,
            self.spec.j * self.spec.delta,
            self.to_uniform_values(),
        )
    }
}

/// Hard cap on series iterations.
pub const MAX_SERIES_ITERATIONS: usize = 1_000_000;

/// Accumulate the stationary series for the given spec. Stops when the
/// geometric tail estimate `sup(v_n)·q/(1-q)` (with `q` the measured mass
/// ratio) falls below `tail_tol`; the reported residual is the sup of the
/// first neglected term.
pub fn stationary_series(spec: &StationarySpec, grid: Grid) -> Result<StationaryProfile> {
    let radius = spec.radius();
    let cache = KernelCache::truncated(spec.delta, grid, radius)?;
    let jdelta = spec.j * spec.delta;
    let mut term: Vec<f64> = cache.origin_col().iter().map(|c| c * jdelta).collect();
    let mut acc = term.clone();
    let mut prev_mass = cache.native_mass(&term);
    let mut iterations = 1usize;
    loop {
        if iterations >= MAX_SERIES_ITERATIONS {
            return Err(CoreError::ConvergenceFailure {
                iterations,
                residual: sup(&term),
            });
        }
        term = cache.apply_values(&term)?;
        let mass = cache.native_mass(&term);
        let q = if prev_mass > 0.0 { mass / prev_mass } else { 0.0 };
        prev_mass = mass;
        let sup_term = sup(&term);
        iterations += 1;
        let tail_estimate = if q < 1.0 {
            sup_term * q / (1.0 - q)
        } else {
            f64::INFINITY
        };
        if tail_estimate < spec.tail_tol {
            // accumulate the final term as well, then stop
            for (a, t) in acc.iter_mut().zip(&term) {
                *a += t;
            }
            term = cache.apply_values(&term)?;
            return Ok(StationaryProfile {
                grid,
                values: acc,
                widths: cache.widths().to_vec(),
                spec: *spec,
                iterations,
                residual_sup: sup(&term),
                escape_ratio: q,
            });
        }
        for (a, t) in acc.iter_mut().zip(&term) {
            *a += t;
        }
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

/// Residual of the fixed-point equation for a candidate density: sup norm
/// of `ρ - (jδ g⁰(0,·) + g⁰ ρ)`, evaluated with a fresh kernel application.
pub fn fixed_point_residual(profile: &StationaryProfile) -> Result<f64> {
    let cache = KernelCache::truncated(
        profile.spec.delta,
        profile.grid,
        profile.spec.radius(),
    )?;
    let jdelta = profile.spec.j * profile.spec.delta;
    let applied = cache.apply_values(profile.values())?;
    let worst = profile
        .values()
        .iter()
        .zip(&applied)
        .zip(cache.origin_col())
        .map(|((rho, ap), col)| (rho - (jdelta * col + ap)).abs())
        .fold(0.0f64, f64::max);
    Ok(worst)
}

/// Per-step mass balance: one full-kernel step applied to the fixed point
/// must push exactly `jδ` past the edge. Returns the absolute defect,
/// computed from escape functionals that are assembled independently of the
/// truncated matrix.
pub fn mass_balance_defect(profile: &StationaryProfile) -> Result<f64> {
    let cache = KernelCache::truncated(
        profile.spec.delta,
        profile.grid,
        profile.spec.radius(),
    )?;
    let jdelta = profile.spec.j * profile.spec.delta;
    let escaped: f64 = cache
        .escape_row()
        .iter()
        .zip(profile.values())
        .map(|(e, v)| e * v)
        .sum::<f64>()
        + jdelta * cache.escape_atom();
    Ok((escaped - jdelta).abs())
}

/// One rung of a `δ`-ladder comparison against the linear limit.
#[derive(Debug, Clone)]
pub struct LimitRung {
    pub delta: f64,
    /// Excluded boundary-layer width `5√δ`.
    pub kappa: f64,
    /// Sup of `|ρ^(δ) - target|` over cell midpoints in `[0, R - κ]`.
    pub sup_err: f64,
    /// Undiluted density value in the edge cell.
    pub edge_value: f64,
    pub iterations: usize,
}

/// Boundary-layer margin excluded from sup-error reports: `5√δ`, capped at
/// half the support so coarse rungs still examine a non-trivial window.
pub fn boundary_margin(delta: f64, radius: f64) -> f64 {
    (5.0 * delta.sqrt()).min(0.5 * radius)
}

/// Compare the stationary profile against its `δ → 0` limit on a ladder of
/// step sizes. For a fixed edge the target is `2j(R - r)`; for the layer
/// mode it is `2j(1 - r) + j/A`.
pub fn linear_limit_check(
    edge: EdgeMode,
    deltas: &[f64],
    j: f64,
    grid: Grid,
    tail_tol: f64,
) -> Result<Vec<LimitRung>> {
    let mut rungs = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let spec = StationarySpec::new(edge, delta, j, tail_tol)?;
        let profile = stationary_series(&spec, grid)?;
        let radius = spec.radius();
        let kappa = boundary_margin(delta, radius);
        let hi = radius - kappa;
        let target = |r: f64| match edge {
            EdgeMode::Fixed(r_edge) => 2.0 * j * (r_edge - r),
            EdgeMode::Layer(a) => 2.0 * j * (1.0 - r) + j / a,
        };
        let mut sup_err = 0.0f64;
        for i in 0..grid.m() {
            let r = grid.mid(i);
            if r > hi {
                break;
            }
            sup_err = sup_err.max((profile.values()[i] - target(r)).abs());
        }
        rungs.push(LimitRung {
            delta,
            kappa,
            sup_err,
            edge_value: profile.edge_value(),
            iterations: profile.iterations,
        });
    }
    Ok(rungs)
}

/// Ladder report for one manifold element.
#[derive(Debug, Clone)]
pub struct ManifoldReport {
    pub rungs: Vec<LimitRung>,
    pub final_sup_err: f64,
    pub pass: bool,
}

/// Check that the `δ → 0` stationary limit reproduces the invariant linear
/// profile with mass `M`: for `M < j` via the fixed edge `R = sqrt(M/j)`,
/// for `M > j` via the layer `A = j/(M - j)`. At `M = j` the two
/// parameterizations agree by continuity and the fixed-edge branch is used.
pub fn manifold_consistency(
    m_mass: f64,
    j: f64,
    deltas: &[f64],
    grid: Grid,
    tol: f64,
) -> Result<ManifoldReport> {
    if !(m_mass > 0.0) {
        return Err(CoreError::InvalidParams("mass must be positive".into()));
    }
    let edge = if m_mass < j {
        EdgeMode::Fixed((m_mass / j).sqrt())
    } else {
        EdgeMode::Layer(j / (m_mass - j).max(1e-9))
    };
    let mut rungs = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let spec = StationarySpec::new(edge, delta, j, 1e-9)?;
        let profile = stationary_series(&spec, grid)?;
        let kappa = boundary_margin(delta, spec.radius());
        let hi = spec.radius() - kappa;
        let mut sup_err = 0.0f64;
        for i in 0..grid.m() {
            let r = grid.mid(i);
            if r > hi {
                break;
            }
            sup_err = sup_err.max((profile.values()[i] - linear_density(m_mass, j, r)).abs());
        }
        rungs.push(LimitRung {
            delta,
            kappa,
            sup_err,
            edge_value: profile.edge_value(),
            iterations: profile.iterations,
        });
    }
    let final_sup_err = rungs.last().map_or(f64::INFINITY, |r| r.sup_err);
    let pass = final_sup_err <= tol;
    Ok(ManifoldReport {
        rungs,
        final_sup_err,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barriers::barrier_step_minus;

    fn grid() -> Grid {
        Grid::new(200).unwrap()
    }

    fn series(r: f64, delta: f64) -> StationaryProfile {
        let spec = StationarySpec::new(EdgeMode::Fixed(r), delta, 1.0, 1e-9).unwrap();
        stationary_series(&spec, grid()).unwrap()
    }

    #[test]
    fn series_is_nonnegative_and_supported_inside_edge() {
        let p = series(0.5, 4e-3);
        for (i, v) in p.values().iter().enumerate() {
            assert!(*v >= 0.0);
            if p.grid().left(i) >= 0.5 {
                assert_eq!(*v, 0.0, "cell {i} beyond the edge");
            }
        }
    }

    #[test]
    fn fixed_point_residual_is_tiny() {
        let p = series(0.5, 4e-3);
        let res = fixed_point_residual(&p).unwrap();
        assert!(res < 1e-8, "residual {res}");
    }

    #[test]
    fn mass_balance_holds() {
        let p = series(0.5, 4e-3);
        let defect = mass_balance_defect(&p).unwrap();
        assert!(defect < 1e-8, "defect {defect}");
    }

    #[test]
    fn escape_ratio_bounded_away_from_one() {
        for delta in [1e-2, 4e-3] {
            let p = series(0.5, delta);
            assert!(
                p.escape_ratio < 1.0 - delta / 2.0,
                "delta={delta}: ratio {}",
                p.escape_ratio
            );
        }
        // layer mode too
        let spec = StationarySpec::new(EdgeMode::Layer(1.0), 4e-3, 1.0, 1e-9).unwrap();
        let p = stationary_series(&spec, grid()).unwrap();
        assert!(p.escape_ratio < 1.0);
    }

    #[test]
    fn profile_monotone_in_edge() {
        let small = series(0.4, 4e-3);
        let large = series(0.6, 4e-3);
        for i in 0..grid().m() {
            if grid().left(i) + grid().h() <= 0.4 {
                assert!(
                    large.values()[i] >= small.values()[i] - 1e-12,
                    "cell {i}: {} < {}",
                    large.values()[i],
                    small.values()[i]
                );
            }
        }
    }

    #[test]
    fn stationary_state_is_fixed_by_barrier_step() {
        // One smooth-then-cut step applied to jδ·D_0 + ρ reproduces it.
        let delta = 4e-3;
        let p = series(0.5, delta);
        let state = p.to_measure().unwrap();
        let cache = KernelCache::neumann(delta, p.grid()).unwrap();
        let stepped = barrier_step_minus(&state, delta, 1.0, &cache).unwrap();
        // compare as uniform cell averages
        let before = state.values();
        let after = stepped.values();
        let worst = before
            .iter()
            .zip(after)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(worst <= 10.0 * p.spec.tail_tol, "sup deviation {worst}");
        assert!((stepped.atom() - state.atom()).abs() < 1e-15);
    }

    #[test]
    fn linear_limit_errors_shrink_with_delta() {
        let rungs = linear_limit_check(
            EdgeMode::Fixed(0.5),
            &[1e-2, 4e-3],
            1.0,
            grid(),
            1e-9,
        )
        .unwrap();
        assert!(rungs[1].sup_err <= rungs[0].sup_err + 1e-9);
        assert!(rungs[1].sup_err < 0.1, "sup err {}", rungs[1].sup_err);
    }

    #[test]
    fn manifold_consistency_below_critical_mass() {
        let report = manifold_consistency(0.25, 1.0, &[1e-2, 4e-3], grid(), 0.08).unwrap();
        assert!(report.pass, "final error {}", report.final_sup_err);
    }

    #[test]
    fn manifold_consistency_above_critical_mass() {
        // M = 2, j = 1 routes through the shrinking layer with A = j/(M-j) = 1.
        let report = manifold_consistency(2.0, 1.0, &[1e-2, 4e-3], grid(), 0.15).unwrap();
        assert!(report.pass, "final error {}", report.final_sup_err);
        assert!(report.rungs[1].sup_err <= report.rungs[0].sup_err + 1e-9);
    }

    #[test]
    fn layer_mode_requires_room() {
        assert!(StationarySpec::new(EdgeMode::Layer(200.0), 1e-2, 1.0, 1e-9).is_err());
        assert!(StationarySpec::new(EdgeMode::Fixed(1.2), 1e-2, 1.0, 1e-9).is_err());
    }

    #[test]
    fn grid_resolution_predicate() {
        let spec = StationarySpec::new(EdgeMode::Fixed(0.5), 1e-3, 1.0, 1e-9).unwrap();
        assert!(spec.grid_resolves(Grid::new(400).unwrap()));
        assert!(!spec.grid_resolves(Grid::new(20).unwrap()));
    }
}
