//! Macroscopic states `c·D_0 + ρ` and the barrier dynamics built from
//! heat-kernel smoothing and the cut-and-paste map.
//!
//! The cut-and-paste map removes mass `jδ` from the right end of a profile
//! and redeposits it as an atom at the origin; alternating it with the
//! Neumann kernel in the two possible orders yields a lower and an upper
//! evolution for the mass-transport order. Their common limit — the
//! separating element — is the macroscopic profile.

use crate::error::{CoreError, Result};
use crate::kernels::{Grid, KernelCache, KernelKind};
use crate::profile::{linear_cell_integral, linear_suffix_mass};
use serde::{Deserialize, Serialize};

/// A non-negative atom at the origin plus a cellwise-constant density on
/// `[0, 1]`.
#[derive(Debug, Clone)]
pub struct MeasureU {
    grid: Grid,
    atom: f64,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MeasureUWire {
    atom: f64,
    cells: Vec<f64>,
}

impl MeasureU {
    pub fn new(grid: Grid, atom: f64, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.m() {
            return Err(CoreError::ShapeMismatch(format!(
                "{} cells for a grid of {}",
                values.len(),
                grid.m()
            )));
        }
        if !(atom >= 0.0) {
            return Err(CoreError::Domain(format!("atom must be >= 0, got {atom}")));
        }
        for v in values.iter_mut() {
            if *v < 0.0 {
                if *v < -1e-9 {
                    return Err(CoreError::Domain(format!("negative density {v}")));
                }
                *v = 0.0;
            }
        }
        Ok(MeasureU { grid, atom, values })
    }

    /// Constant density carrying the given total mass, no atom.
    pub fn uniform(grid: Grid, mass: f64) -> Result<Self> {
        MeasureU::new(grid, 0.0, vec![mass; grid.m()])
    }

    /// Cell averages of a pointwise density.
    pub fn from_fn(grid: Grid, atom: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.m()).map(|i| f(grid.mid(i))).collect();
        MeasureU::new(grid, atom, values)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn atom(&self) -> f64 {
        self.atom
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.atom + self.grid.mass(&self.values)
    }

    /// Suffix-mass functional at the dual nodes `i/m`, `i = 0..=m`; entry 0
    /// is the full mass (the atom at the origin counts only there).
    pub fn f_nodes(&self) -> Vec<f64> {
        let m = self.grid.m();
        let h = self.grid.h();
        let mut f = vec![0.0; m + 1];
        for i in (0..m).rev() {
            f[i] = f[i + 1] + h * self.values[i];
        }
        f[0] += self.atom;
        f
    }

    /// Suffix mass `∫_r^1 ρ`, plus the atom when `r = 0`.
    pub fn f_at(&self, r: f64) -> f64 {
        let m = self.grid.m();
        let h = self.grid.h();
        if r <= 0.0 {
            return self.mass();
        }
        if r >= 1.0 {
            return 0.0;
        }
        let k = ((r / h) as usize).min(m - 1);
        let mut f = 0.0;
        for i in (k + 1..m).rev() {
            f += h * self.values[i];
        }
        f + (self.grid.node(k + 1) - r) * self.values[k]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MeasureUWire {
            atom: self.atom,
            cells: self.values.clone(),
        })
        .expect("measure serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: MeasureUWire =
            serde_json::from_str(text).map_err(|e| CoreError::InvalidProfile(e.to_string()))?;
        let grid = Grid::new(wire.cells.len())?;
        MeasureU::new(grid, wire.atom, wire.cells)
    }

    /// Rows `(r, rho, F)` at cell midpoints, ready for CSV export.
    pub fn profile_rows(&self) -> Vec<(f64, f64, f64)> {
        (0..self.grid.m())
            .map(|i| {
                let r = self.grid.mid(i);
                (r, self.values[i], self.f_at(r))
            })
            .collect()
    }
}

/// Suffix-mass functional `F(r; u)`.
pub fn f_functional(u: &MeasureU, r: f64) -> f64 {
    u.f_at(r)
}

/// Mass-transport partial order: `u <= v` iff `F(·; u) <= F(·; v)` at every
/// dual node (tolerance 1e-12 absorbs cell-splitting round-off).
pub fn partial_order_leq(u: &MeasureU, v: &MeasureU) -> Result<bool> {
    if u.grid() != v.grid() {
        return Err(CoreError::ShapeMismatch(
            "partial order needs a common grid".into(),
        ));
    }
    let fu = u.f_nodes();
    let fv = v.f_nodes();
    Ok(fu.iter().zip(&fv).all(|(a, b)| *a <= *b + 1e-12))
}

/// Result of one cut: the new state and the radius the cut reached.
#[derive(Debug, Clone)]
pub struct CutResult {
    pub measure: MeasureU,
    pub r_cut: f64,
}

/// Remove mass `j·δ` from the right end of the density and redeposit it as
/// an atom at the origin. The boundary cell is split exactly (its kept mass
/// is spread back over the whole cell), so total mass is conserved to
/// round-off. Requires `∫ρ > jδ`.
pub fn cut_and_paste(u: &MeasureU, delta: f64, j: f64) -> Result<CutResult> {
    if !(delta > 0.0 && j > 0.0) {
        return Err(CoreError::InvalidParams(format!(
            "need positive delta and j, got {delta}, {j}"
        )));
    }
    let target = j * delta;
    let grid = u.grid();
    let h = grid.h();
    let density_mass = grid.mass(u.values());
    if !(density_mass > target) {
        return Err(CoreError::MassTooSmall {
            available: density_mass,
            required: target,
        });
    }
    let mut values = u.values().to_vec();
    let mut removed = 0.0;
    let mut r_cut = 0.0;
    for k in (0..grid.m()).rev() {
        let cell_mass = h * values[k];
        if removed + cell_mass < target {
            removed += cell_mass;
            values[k] = 0.0;
        } else {
            let extra = target - removed;
            values[k] -= extra / h;
            let kept_fraction = if cell_mass > 0.0 {
                1.0 - extra / cell_mass
            } else {
                1.0
            };
            r_cut = grid.left(k) + kept_fraction * h;
            break;
        }
    }
    let measure = MeasureU::new(grid, u.atom() + target, values)?;
    Ok(CutResult { measure, r_cut })
}

fn require_neumann(cache: &KernelCache) -> Result<()> {
    match cache.kind {
        KernelKind::Neumann => Ok(()),
        _ => Err(CoreError::ShapeMismatch(
            "barrier steps need a Neumann cache".into(),
        )),
    }
}

/// One step of the lower evolution: smooth with the kernel, then cut. The
/// output atom is exactly `jδ`.
pub fn barrier_step_minus(
    u: &MeasureU,
    delta: f64,
    j: f64,
    cache: &KernelCache,
) -> Result<MeasureU> {
    require_neumann(cache)?;
    let smoothed = MeasureU::new(cache.grid(), 0.0, cache.apply_kernel(u)?)?;
    Ok(cut_and_paste(&smoothed, delta, j)?.measure)
}

/// One step of the upper evolution: cut, then smooth. The output has no
/// atom (the kernel spreads it out).
pub fn barrier_step_plus(
    u: &MeasureU,
    delta: f64,
    j: f64,
    cache: &KernelCache,
) -> Result<MeasureU> {
    require_neumann(cache)?;
    let cut = cut_and_paste(u, delta, j)?.measure;
    MeasureU::new(cache.grid(), 0.0, cache.apply_kernel(&cut)?)
}

/// Lower and upper barrier states advanced in lockstep with step `δ`.
#[derive(Debug, Clone)]
pub struct BarrierPair {
    pub lower: MeasureU,
    pub upper: MeasureU,
    pub delta: f64,
    pub steps_done: usize,
    /// Worst violation of `F(lower) <= F(upper)` seen at any node after any
    /// step (positive means a violation of that size).
    pub worst_order_defect: f64,
}

impl BarrierPair {
    pub fn new(u0: &MeasureU, delta: f64) -> Self {
        BarrierPair {
            lower: u0.clone(),
            upper: u0.clone(),
            delta,
            steps_done: 0,
            worst_order_defect: 0.0,
        }
    }

    pub fn step(&mut self, j: f64, cache: &KernelCache) -> Result<()> {
        self.lower = barrier_step_minus(&self.lower, self.delta, j, cache)?;
        self.upper = barrier_step_plus(&self.upper, self.delta, j, cache)?;
        self.steps_done += 1;
        let fl = self.lower.f_nodes();
        let fu = self.upper.f_nodes();
        let defect = fl
            .iter()
            .zip(&fu)
            .map(|(a, b)| a - b)
            .fold(f64::MIN, f64::max);
        self.worst_order_defect = self.worst_order_defect.max(defect);
        Ok(())
    }

    /// Advance both chains to time `t = steps · δ` with `δ = t·2^{-n}`.
    pub fn run(u0: &MeasureU, t: f64, n_doublings: u32, j: f64) -> Result<Self> {
        let steps = 1usize << n_doublings;
        let delta = t / steps as f64;
        let cache = KernelCache::neumann(delta, u0.grid())?;
        let mut pair = BarrierPair::new(u0, delta);
        for _ in 0..steps {
            pair.step(j, &cache)?;
        }
        Ok(pair)
    }

    /// Largest gap `F(upper) - F(lower)` over the dual nodes.
    pub fn sup_f_gap(&self) -> f64 {
        let fl = self.lower.f_nodes();
        let fu = self.upper.f_nodes();
        fl.iter()
            .zip(&fu)
            .map(|(a, b)| b - a)
            .fold(f64::MIN, f64::max)
    }
}

/// The profile squeezed between the barriers at time `t`.
#[derive(Debug, Clone)]
pub struct SeparatingElement {
    pub density: MeasureU,
    /// Final sup-F gap between the barriers.
    pub gap: f64,
    /// Number of step-halving levels used (`δ = t·2^{-n}`).
    pub doublings: u32,
    pub lower: MeasureU,
    pub upper: MeasureU,
    pub worst_order_defect: f64,
}

pub const SEPARATING_MAX_DOUBLINGS: u32 = 16;

/// Squeeze the barriers at fixed `t`, doubling the number of steps until
/// their sup-F distance drops below `tol`. The returned density averages
/// the upper barrier with the lower one (whose atom is pushed into the
/// first cell), so its F lies inside the sandwich at every node.
pub fn separating_element(
    u0: &MeasureU,
    t: f64,
    j: f64,
    tol: f64,
) -> Result<SeparatingElement> {
    if !(t > 0.0) {
        return Err(CoreError::Domain(format!("time must be positive, got {t}")));
    }
    if !(u0.mass() > 0.0) {
        return Err(CoreError::Domain("initial state carries no mass".into()));
    }
    let mut last_gap = f64::INFINITY;
    let mut last_iterations = 0usize;
    for n in 1..=SEPARATING_MAX_DOUBLINGS {
        let pair = match BarrierPair::run(u0, t, n, j) {
            Ok(p) => p,
            // Coarse levels can demand a cut larger than the density mass;
            // they are skipped, finer levels are always admissible.
            Err(CoreError::MassTooSmall { .. }) => continue,
            Err(e) => return Err(e),
        };
        last_iterations = pair.steps_done;
        let gap = pair.sup_f_gap();
        if gap < tol {
            let grid = u0.grid();
            let h = grid.h();
            let mut mixed = pair.upper.values().to_vec();
            let lower_vals = pair.lower.values();
            for (i, v) in mixed.iter_mut().enumerate() {
                let mut lo = lower_vals[i];
                if i == 0 {
                    lo += pair.lower.atom() / h;
                }
                *v = 0.5 * (*v + lo);
            }
            let density = MeasureU::new(grid, 0.0, mixed)?;
            return Ok(SeparatingElement {
                density,
                gap,
                doublings: n,
                lower: pair.lower,
                upper: pair.upper,
                worst_order_defect: pair.worst_order_defect,
            });
        }
        last_gap = gap;
    }
    Err(CoreError::ConvergenceFailure {
        iterations: last_iterations,
        residual: last_gap,
    })
}

/// The invariant linear profile with mass `M`, sampled as exact cell
/// averages (no atom).
pub fn linear_profile(mass: f64, j: f64, grid: Grid) -> Result<MeasureU> {
    if !(mass >= 0.0) || !(j > 0.0) {
        return Err(CoreError::Domain(format!(
            "need mass >= 0 and j > 0, got {mass}, {j}"
        )));
    }
    let h = grid.h();
    let values = (0..grid.m())
        .map(|i| linear_cell_integral(mass, j, grid.left(i), grid.left(i) + h) / h)
        .collect();
    MeasureU::new(grid, 0.0, values)
}

/// Exact suffix mass of the linear profile (for comparisons against grid
/// states).
pub fn linear_profile_f(mass: f64, j: f64, r: f64) -> f64 {
    linear_suffix_mass(mass, j, r)
}

/// Sup over dual nodes of `|F(·; u) - F_ref(·)|` for an analytic reference.
pub fn sup_f_distance_to(u: &MeasureU, f_ref: impl Fn(f64) -> f64) -> f64 {
    let f = u.f_nodes();
    let grid = u.grid();
    f.iter()
        .enumerate()
        .map(|(i, v)| (v - f_ref(grid.node(i))).abs())
        .fold(0.0, f64::max)
}
