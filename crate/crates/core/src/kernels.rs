//! Heat kernels for `∂_t u = ½ ∂_rr u`: the Neumann Green function on
//! `[0, 1]`, the Dirichlet Green function on `[-R, R]`, and the truncated
//! kernel restricted to `[0, R]²`.
//!
//! Pointwise values come from two independent representations, an image sum
//! (converges fast for small times) and an eigenfunction series (fast for
//! large times). Matrix actions on cell-averaged grid densities are
//! assembled from exact per-cell integrals of the eigen-series, which makes
//! the Neumann matrix symmetric and stochastic to near machine precision:
//! the mode integrals over `[0, 1]` cancel exactly, so every row sums to
//! the constant-mode contribution alone.

use crate::barriers::MeasureU;
use crate::error::{CoreError, Result};
use std::f64::consts::PI;

const SQRT_2PI: f64 = 2.5066282746310002;

fn gauss(d: f64, t: f64) -> f64 {
    (-d * d / (2.0 * t)).exp() / (t.sqrt() * SQRT_2PI)
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(CoreError::Domain(format!("time must be positive, got {t}")))
    }
}

fn check_unit(r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(CoreError::Domain(format!("point {r} outside [0, 1]")))
    }
}

fn check_half_width(half_width: f64) -> Result<()> {
    if half_width > 0.0 && half_width.is_finite() {
        Ok(())
    } else {
        Err(CoreError::Domain(format!(
            "half-width must be positive, got {half_width}"
        )))
    }
}

fn check_in(r: f64, half_width: f64) -> Result<()> {
    if r.abs() <= half_width {
        Ok(())
    } else {
        Err(CoreError::Domain(format!(
            "point {r} outside [-{half_width}, {half_width}]"
        )))
    }
}

/// Uniform grid of `m` cells over the unit interval; densities attach to
/// cell midpoints as cell averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    m: usize,
}

impl Grid {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(CoreError::InvalidParams(format!(
                "grid needs at least 2 cells, got {m}"
            )));
        }
        Ok(Grid { m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn mid(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h()
    }

    pub fn left(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    /// Node `i/m` of the dual mesh, `i = 0..=m`.
    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    /// Integral of a cellwise-constant density.
    pub fn mass(&self, values: &[f64]) -> f64 {
        self.h() * values.iter().sum::<f64>()
    }
}

// Number of reflected copies needed so the neglected Gaussian tail stays
// below `tol` anywhere on an interval of length `span`.
fn image_range(t: f64, span: f64, tol: f64) -> i64 {
    let reach = (2.0 * t * (1.0 / tol).ln()).sqrt() + span;
    (reach / (2.0 * span)).ceil() as i64 + 1
}

// Largest mode index whose weight exp(-k²π²t/(2L²)) still matters.
fn series_terms(t: f64, len: f64, tol: f64) -> usize {
    let kmax = (2.0 * (1.0 / tol).ln() / (PI * PI * t)).sqrt() * len;
    kmax.ceil() as usize + 1
}

/// Neumann Green function on `[0, 1]` via the image sum: all reflections of
/// the source across both endpoints, no sign changes. Neglected tail below
/// 1e-14.
pub fn neumann_green_images(t: f64, r: f64, r2: f64) -> Result<f64> {
    check_time(t)?;
    check_unit(r)?;
    check_unit(r2)?;
    let k_max = image_range(t, 1.0, 1e-14);
    let mut sum = 0.0;
    for k in -k_max..=k_max {
        let c = 2.0 * k as f64;
        sum += gauss(r - r2 - c, t) + gauss(r + r2 - c, t);
    }
    Ok(sum)
}

/// Neumann Green function via the cosine eigen-series
/// `1 + 2 Σ_k exp(-k²π²t/2) cos(kπr) cos(kπr')`.
pub fn neumann_green_series(t: f64, r: f64, r2: f64) -> Result<f64> {
    check_time(t)?;
    check_unit(r)?;
    check_unit(r2)?;
    let kmax = series_terms(t, 1.0, 1e-16);
    let mut sum = 1.0;
    for k in 1..=kmax {
        let kp = k as f64 * PI;
        sum += 2.0 * (-kp * kp * t / 2.0).exp() * (kp * r).cos() * (kp * r2).cos();
    }
    Ok(sum)
}

/// Neumann Green function, using the representation that converges faster
/// at this time.
pub fn neumann_green(t: f64, r: f64, r2: f64) -> Result<f64> {
    if t <= 0.5 {
        neumann_green_images(t, r, r2)
    } else {
        neumann_green_series(t, r, r2)
    }
}

/// Dirichlet Green function on `[-R, R]` via the alternating image sum.
pub fn dirichlet_green_images(t: f64, r: f64, r2: f64, half_width: f64) -> Result<f64> {
    check_time(t)?;
    check_half_width(half_width)?;
    check_in(r, half_width)?;
    check_in(r2, half_width)?;
    let k_max = image_range(t, 2.0 * half_width, 1e-14);
    let mut sum = 0.0;
    for k in -k_max..=k_max {
        let c = 4.0 * k as f64 * half_width;
        sum += gauss(r - r2 - c, t) - gauss(r + r2 + 2.0 * half_width - c, t);
    }
    Ok(sum)
}

/// Dirichlet Green function via the sine eigen-series.
pub fn dirichlet_green_series(t: f64, r: f64, r2: f64, half_width: f64) -> Result<f64> {
    check_time(t)?;
    check_half_width(half_width)?;
    check_in(r, half_width)?;
    check_in(r2, half_width)?;
    let len = 2.0 * half_width;
    let kmax = series_terms(t, len, 1e-16);
    let mut sum = 0.0;
    for k in 1..=kmax {
        let w = k as f64 * PI / len;
        sum += (2.0 / len)
            * (-w * w * t / 2.0).exp()
            * (w * (r + half_width)).sin()
            * (w * (r2 + half_width)).sin();
    }
    Ok(sum)
}

/// Dirichlet Green function on `[-R, R]`.
pub fn dirichlet_green(t: f64, r: f64, r2: f64, half_width: f64) -> Result<f64> {
    if t <= 0.5 * (2.0 * half_width) * (2.0 * half_width) {
        dirichlet_green_images(t, r, r2, half_width)
    } else {
        dirichlet_green_series(t, r, r2, half_width)
    }
}

// ∫_0^T gauss(d, t) dt in closed form: 2√T φ(d/√T) - 2|d| Φ(-|d|/√T).
fn gauss_time_integral(d: f64, t_end: f64) -> f64 {
    if t_end <= 0.0 {
        return 0.0;
    }
    let d = d.abs();
    let s = t_end.sqrt();
    let z = d / s;
    2.0 * s * (-0.5 * z * z).exp() / SQRT_2PI - 2.0 * d * norm_cdf(-z)
}

/// Time quadrature `∫_0^T G^dir_t(0, r) dt` of the Dirichlet kernel seeded
/// at the origin. As `T → ∞` this converges to the resolvent potential
/// `R - |r|`. The integrable `t^{-1/2}` head is taken analytically with the
/// free-space Gaussian (images are negligible at those times); the rest is
/// adaptive quadrature to absolute tolerance `tol`.
pub fn dirichlet_resolvent_origin(
    half_width: f64,
    r: f64,
    t_horizon: f64,
    tol: f64,
) -> Result<f64> {
    check_half_width(half_width)?;
    check_in(r, half_width)?;
    if !(t_horizon > 0.0) {
        return Err(CoreError::Domain(format!(
            "horizon must be positive, got {t_horizon}"
        )));
    }
    let gap = half_width - r.abs();
    if gap <= 0.0 {
        return Ok(0.0); // the kernel vanishes identically at the boundary
    }
    let t0 = (1e-3_f64).min(gap * gap / 25.0).min(0.5 * t_horizon);
    let mut head = gauss_time_integral(r, t0);
    for image in [2.0 * half_width, -2.0 * half_width] {
        head -= gauss_time_integral(r - image, t0);
    }
    // The integrand peaks around t ~ r² and decays exponentially, so a
    // single adaptive pass over [t0, T] can mistake it for zero. Integrate
    // over octave panels instead.
    let mut tail = 0.0;
    let mut lo = t0;
    while lo < t_horizon {
        let hi = (2.0 * lo).min(t_horizon);
        tail += crate::quad::adaptive_simpson(
            |t| dirichlet_green(t, 0.0, r, half_width).unwrap_or(0.0),
            lo,
            hi,
            tol / 30.0,
        );
        lo = hi;
    }
    Ok(head + tail)
}

/// Which kernel a cache holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// Mass-conserving kernel on `[0, 1]`.
    Neumann,
    /// Absorbing kernel on `[-R, R]`; carries the half-width.
    Dirichlet(f64),
    /// Neumann kernel with sources and targets restricted to `[0, R]`;
    /// carries the radius.
    Truncated(f64),
}

/// Precomputed matrix action of a kernel on cell-averaged densities for a
/// fixed time step, plus the column generated by a unit atom at the origin.
/// Immutable once built, safe to share across workers.
///
/// For the truncated kind, cells cut by the radius enter with their exact
/// partial integrals and matrix entries are normalized by the clipped cell
/// widths (values are averages over `cell ∩ [0, R]`). `escape_row[j]` /
/// `escape_atom` give the mass fraction a unit-average source in cell `j` /
/// a unit atom at the origin sends beyond the radius in one step; they are
/// computed independently of the matrix so conservation can be checked
/// rather than enforced.
#[derive(Debug, Clone)]
pub struct KernelCache {
    pub kind: KernelKind,
    pub t: f64,
    grid: Grid,
    matrix: Vec<f64>,
    origin_col: Vec<f64>,
    widths: Vec<f64>,
    escape_row: Vec<f64>,
    escape_atom: f64,
}

impl KernelCache {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.grid.m() + j]
    }

    pub fn origin_col(&self) -> &[f64] {
        &self.origin_col
    }

    /// Clipped width of each cell (equals `h` away from the truncation
    /// radius).
    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn escape_row(&self) -> &[f64] {
        &self.escape_row
    }

    pub fn escape_atom(&self) -> f64 {
        self.escape_atom
    }

    /// Mass-conserving cache on `[0, 1]`.
    pub fn neumann(t: f64, grid: Grid) -> Result<Self> {
        check_time(t)?;
        Self::build_capped(t, grid, 1.0, KernelKind::Neumann)
    }

    /// Truncated cache with the given radius.
    pub fn truncated(t: f64, grid: Grid, radius: f64) -> Result<Self> {
        check_time(t)?;
        if !(radius > 0.0 && radius <= 1.0) {
            return Err(CoreError::Domain(format!(
                "truncation radius must lie in (0, 1], got {radius}"
            )));
        }
        Self::build_capped(t, grid, radius, KernelKind::Truncated(radius))
    }

    fn build_capped(t: f64, grid: Grid, cap: f64, kind: KernelKind) -> Result<Self> {
        let m = grid.m();
        let h = grid.h();
        let widths: Vec<f64> = (0..m)
            .map(|i| (cap.min(grid.left(i) + h) - grid.left(i)).max(0.0))
            .collect();
        // Constant mode.
        let mut matrix = vec![0.0; m * m];
        for i in 0..m {
            if widths[i] == 0.0 {
                continue;
            }
            let row = &mut matrix[i * m..(i + 1) * m];
            for (j, wj) in widths.iter().enumerate() {
                row[j] = *wj;
            }
        }
        let mut origin_col: Vec<f64> = widths
            .iter()
            .map(|w| if *w > 0.0 { 1.0 } else { 0.0 })
            .collect();
        let mut escape_row: Vec<f64> = widths.iter().map(|w| w * (1.0 - cap)).collect();
        let mut escape_atom = 1.0 - cap;
        // Oscillating modes, with exact cell integrals ∫ cos(kπ r) dr over
        // the clipped cells.
        let kmax = series_terms(t, 1.0, 1e-16);
        let mut cells = vec![0.0f64; m];
        for k in 1..=kmax {
            let kp = k as f64 * PI;
            let weight = 2.0 * (-kp * kp * t / 2.0).exp();
            if weight < 1e-18 {
                break;
            }
            for (i, c) in cells.iter_mut().enumerate() {
                *c = if widths[i] > 0.0 {
                    let a = grid.left(i);
                    ((kp * (a + widths[i])).sin() - (kp * a).sin()) / kp
                } else {
                    0.0
                };
            }
            for i in 0..m {
                if widths[i] == 0.0 {
                    continue;
                }
                let s = weight * cells[i] / widths[i];
                if s == 0.0 {
                    continue;
                }
                let row = &mut matrix[i * m..(i + 1) * m];
                for (j, c) in cells.iter().enumerate() {
                    row[j] += s * c;
                }
            }
            for (i, c) in cells.iter().enumerate() {
                if widths[i] > 0.0 {
                    origin_col[i] += weight * c / widths[i];
                }
            }
            if cap < 1.0 {
                // ∫_cap^1 cos(kπ r) dr = -sin(kπ cap)/(kπ)
                let beyond = -(kp * cap).sin() / kp;
                for (j, c) in cells.iter().enumerate() {
                    escape_row[j] += weight * c * beyond;
                }
                escape_atom += weight * beyond;
            }
        }
        for v in matrix
            .iter_mut()
            .chain(origin_col.iter_mut())
            .chain(escape_row.iter_mut())
        {
            if *v < 0.0 {
                *v = 0.0; // series truncation leaves ~1e-16 ringing
            }
        }
        if cap >= 1.0 {
            escape_row = vec![0.0; m];
            escape_atom = 0.0;
        }
        Ok(KernelCache {
            kind,
            t,
            grid,
            matrix,
            origin_col,
            widths,
            escape_row,
            escape_atom,
        })
    }

    /// Absorbing cache on `[-R, R]` with its own uniform cells. Used for
    /// kernel verification; measure-valued states live on `[0, 1]` grids.
    pub fn dirichlet(t: f64, grid: Grid, half_width: f64) -> Result<Self> {
        check_time(t)?;
        check_half_width(half_width)?;
        let m = grid.m();
        let len = 2.0 * half_width;
        let hd = len / m as f64;
        let kmax = series_terms(t, len, 1e-16);
        let mut matrix = vec![0.0; m * m];
        let mut origin_col = vec![0.0; m];
        let mut cells = vec![0.0f64; m];
        for k in 1..=kmax {
            let w = k as f64 * PI / len;
            let weight = (2.0 / len) * (-w * w * t / 2.0).exp();
            if weight < 1e-18 {
                break;
            }
            // ∫_cell sin(w (r + R)) dr with cell i = [-R + i hd, -R + (i+1) hd]
            for (i, c) in cells.iter_mut().enumerate() {
                let a = i as f64 * hd;
                *c = ((w * a).cos() - (w * (a + hd)).cos()) / w;
            }
            let center = (w * half_width).sin();
            for i in 0..m {
                let s = weight * cells[i] / hd;
                let row = &mut matrix[i * m..(i + 1) * m];
                for (j, c) in cells.iter().enumerate() {
                    row[j] += s * c;
                }
                origin_col[i] += weight * cells[i] / hd * center;
            }
        }
        for v in matrix.iter_mut().chain(origin_col.iter_mut()) {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(KernelCache {
            kind: KernelKind::Dirichlet(half_width),
            t,
            grid,
            matrix,
            origin_col,
            widths: vec![hd; m],
            escape_row: Vec::new(),
            escape_atom: 0.0,
        })
    }

    /// Raw matrix-vector action in the cache's native basis.
    pub fn apply_values(&self, values: &[f64]) -> Result<Vec<f64>> {
        let m = self.grid.m();
        if values.len() != m {
            return Err(CoreError::ShapeMismatch(format!(
                "density has {} cells, cache grid has {m}",
                values.len()
            )));
        }
        let mut out = vec![0.0; m];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.matrix[i * m..(i + 1) * m];
            let mut acc = 0.0;
            for (r, v) in row.iter().zip(values) {
                acc += r * v;
            }
            *o = acc;
        }
        Ok(out)
    }

    /// Action on a macroscopic state `c·D_0 + ρ`: returns the plain grid
    /// density `matrix·ρ + c·origin_col`, with the atom carried through the
    /// exact kernel column. For the truncated kind the input density must be
    /// supported in `[0, radius]`.
    pub fn apply_kernel(&self, u: &MeasureU) -> Result<Vec<f64>> {
        let m = self.grid.m();
        if u.grid().m() != m {
            return Err(CoreError::ShapeMismatch(format!(
                "measure grid {} vs cache grid {}",
                u.grid().m(),
                m
            )));
        }
        let h = self.grid.h();
        let values = match self.kind {
            KernelKind::Neumann => u.values().to_vec(),
            KernelKind::Truncated(radius) => {
                let mut v = u.values().to_vec();
                let mut stray = 0.0;
                for (i, val) in v.iter_mut().enumerate() {
                    let w = self.widths[i];
                    if w == 0.0 {
                        stray += h * *val;
                        *val = 0.0;
                    } else if w < h {
                        // undilute: the cell's mass sits inside [0, radius]
                        *val *= h / w;
                    }
                }
                if stray.abs() > 1e-9 * (1.0 + u.mass()) {
                    return Err(CoreError::Domain(format!(
                        "density carries mass {stray:.3e} beyond the truncation radius {radius}"
                    )));
                }
                v
            }
            KernelKind::Dirichlet(_) => {
                return Err(CoreError::ShapeMismatch(
                    "Dirichlet caches act on plain densities, not measures".into(),
                ))
            }
        };
        let mut out = self.apply_values(&values)?;
        if u.atom() != 0.0 {
            for (o, c) in out.iter_mut().zip(&self.origin_col) {
                *o += u.atom() * c;
            }
        }
        if let KernelKind::Truncated(_) = self.kind {
            // re-dilute so the result is a plain average over full cells
            for (o, w) in out.iter_mut().zip(&self.widths) {
                *o *= w / h;
            }
        }
        Ok(out)
    }

    /// Mass carried by a native-basis density vector.
    pub fn native_mass(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(&self.widths)
            .map(|(v, w)| v * w)
            .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // Straight transcription of the image construction, kept independent of
    // the library path it checks.
    fn oracle_neumann(t: f64, r: f64, r2: f64, k_range: i64) -> f64 {
        let mut sum = 0.0;
        for k in -k_range..=k_range {
            let c = 2.0 * k as f64;
            for s in [r2, -r2] {
                sum += (-(r - s - c) * (r - s - c) / (2.0 * t)).exp()
                    / (2.0 * PI * t).sqrt();
            }
        }
        sum
    }

    #[test]
    fn neumann_matches_independent_image_oracle() {
        let got = neumann_green(0.1, 0.5, 0.5).unwrap();
        let want = oracle_neumann(0.1, 0.5, 0.5, 20);
        assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        // frozen value of the oracle: the central Gaussian 1/√(0.2π) plus
        // the two images at distance 1
        assert_abs_diff_eq!(want, 1.2785669994156843, epsilon = 1e-12);
    }

    #[test]
    fn neumann_long_time_uniformizes() {
        for (r, r2) in [(0.0, 0.3), (0.5, 0.5), (1.0, 0.2)] {
            assert_abs_diff_eq!(neumann_green(100.0, r, r2).unwrap(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn neumann_symmetric_in_arguments() {
        for t in [0.01, 0.3, 2.0] {
            let a = neumann_green(t, 0.2, 0.7).unwrap();
            let b = neumann_green(t, 0.7, 0.2).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn neumann_rejects_bad_arguments() {
        assert!(neumann_green(0.0, 0.5, 0.5).is_err());
        assert!(neumann_green(-1.0, 0.5, 0.5).is_err());
        assert!(neumann_green(0.1, 1.5, 0.5).is_err());
    }

    #[test]
    fn images_agree_with_series_across_times() {
        // 10 x 10 point grid over [0,1]² for each time in a log sweep.
        let mut worst: f64 = 0.0;
        for &t in &[1e-3, 3e-3, 1e-2, 0.05, 0.2, 0.5, 1.0, 3.0, 10.0] {
            for i in 0..10 {
                for j in 0..10 {
                    let r = i as f64 / 9.0;
                    let r2 = j as f64 / 9.0;
                    let a = neumann_green_images(t, r, r2).unwrap();
                    let b = neumann_green_series(t, r, r2).unwrap();
                    worst = worst.max((a - b).abs());
                }
            }
        }
        assert!(worst < 1e-8, "max image/series discrepancy {worst}");
    }

    #[test]
    fn dirichlet_vanishes_at_boundary() {
        for t in [0.01, 0.1, 1.0] {
            for r2 in [-0.3, 0.0, 0.42] {
                let v = dirichlet_green(t, 0.5, r2, 0.5).unwrap();
                assert!(v.abs() < 1e-10, "t={t} r2={r2}: {v}");
                let w = dirichlet_green(t, -0.5, r2, 0.5).unwrap();
                assert!(w.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dirichlet_decays_at_long_times() {
        let v = dirichlet_green(30.0, 0.1, 0.0, 0.5).unwrap();
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn dirichlet_center_value_below_free_space() {
        // t = 0.05, R = 0.5: the free-space value minus positive image
        // corrections.
        let free = 1.0 / (0.1 * PI).sqrt();
        let v = dirichlet_green(0.05, 0.0, 0.0, 0.5).unwrap();
        assert!(v > 0.0 && v < free, "free {free}, dirichlet {v}");
        // independent alternating-image oracle
        let mut want = 0.0;
        for k in -20..=20i64 {
            let c = 2.0 * k as f64;
            want += (-(c * c) / 0.1).exp() / (0.1 * PI).sqrt()
                - (-(1.0 + c) * (1.0 + c) / 0.1).exp() / (0.1 * PI).sqrt();
        }
        assert_abs_diff_eq!(v, want, epsilon = 1e-12);
    }

    #[test]
    fn dirichlet_images_agree_with_series() {
        let mut worst: f64 = 0.0;
        for &t in &[1e-3, 1e-2, 0.1, 0.5, 2.0] {
            for i in 0..8 {
                for j in 0..8 {
                    let r = -0.5 + i as f64 / 7.0;
                    let r2 = -0.5 + j as f64 / 7.0;
                    let a = dirichlet_green_images(t, r, r2, 0.5).unwrap();
                    let b = dirichlet_green_series(t, r, r2, 0.5).unwrap();
                    worst = worst.max((a - b).abs());
                }
            }
        }
        assert!(worst < 1e-8, "max discrepancy {worst}");
    }

    #[test]
    fn resolvent_reproduces_tent_potential() {
        for (r, want) in [(0.0, 0.5), (0.25, 0.25), (-0.25, 0.25), (0.45, 0.05)] {
            let v = dirichlet_resolvent_origin(0.5, r, 20.0, 1e-8).unwrap();
            assert!((v - want).abs() < 1e-3, "r={r}: {v} vs {want}");
        }
        let at_edge = dirichlet_resolvent_origin(0.5, 0.5, 20.0, 1e-8).unwrap();
        assert!(at_edge.abs() < 1e-3);
    }

    #[test]
    fn neumann_matrix_is_stochastic_and_symmetric() {
        let grid = Grid::new(80).unwrap();
        for &t in &[1e-3, 0.02, 0.7] {
            let cache = KernelCache::neumann(t, grid).unwrap();
            let m = grid.m();
            for i in 0..m {
                let row_sum: f64 = (0..m).map(|j| cache.entry(i, j)).sum();
                assert!(
                    (row_sum - 1.0).abs() < 1e-10,
                    "t={t} row {i} sums to {row_sum}"
                );
                for j in 0..i {
                    assert!(
                        (cache.entry(i, j) - cache.entry(j, i)).abs() < 1e-10,
                        "asymmetry at ({i},{j})"
                    );
                }
            }
            assert!(cache.matrix().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn matrix_entries_match_pointwise_kernel() {
        // Away from sharp peaks a cell average is close to the midpoint
        // value; this ties the series-built matrix back to the image sum.
        let grid = Grid::new(100).unwrap();
        let t = 0.05;
        let cache = KernelCache::neumann(t, grid).unwrap();
        let h = grid.h();
        for (i, j) in [(10, 40), (50, 50), (0, 3), (97, 99)] {
            let want = neumann_green_images(t, grid.mid(i), grid.mid(j)).unwrap() * h;
            assert_abs_diff_eq!(cache.entry(i, j), want, epsilon = 2e-4);
        }
    }

    #[test]
    fn atom_column_uniformizes_at_long_times() {
        let grid = Grid::new(60).unwrap();
        let cache = KernelCache::neumann(100.0, grid).unwrap();
        let u = MeasureU::new(grid, 1.0, vec![0.0; grid.m()]).unwrap();
        let out = cache.apply_kernel(&u).unwrap();
        for v in &out {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn constants_are_invariant_and_mass_conserved() {
        let grid = Grid::new(120).unwrap();
        let cache = KernelCache::neumann(0.04, grid).unwrap();
        let c = 1.7;
        let u = MeasureU::new(grid, 0.0, vec![c; grid.m()]).unwrap();
        let out = cache.apply_kernel(&u).unwrap();
        for v in &out {
            assert_abs_diff_eq!(*v, c, epsilon = 1e-9);
        }
        let with_atom = MeasureU::new(grid, 0.3, vec![c; grid.m()]).unwrap();
        let out2 = cache.apply_kernel(&with_atom).unwrap();
        assert_abs_diff_eq!(grid.mass(&out2), 0.3 + c, epsilon = 1e-8);
    }

    #[test]
    fn semigroup_property_on_smooth_input() {
        let grid = Grid::new(400).unwrap();
        let t = 0.25;
        let one = KernelCache::neumann(t, grid).unwrap();
        let two = KernelCache::neumann(2.0 * t, grid).unwrap();
        let smooth: Vec<f64> = (0..grid.m())
            .map(|i| 1.0 + (PI * grid.mid(i)).cos() * 0.5)
            .collect();
        let once = two.apply_values(&smooth).unwrap();
        let twice = one.apply_values(&one.apply_values(&smooth).unwrap()).unwrap();
        let defect = once
            .iter()
            .zip(&twice)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(defect < 1e-6, "semigroup defect {defect}");
    }

    #[test]
    fn truncated_dominated_by_neumann_and_loses_mass() {
        let grid = Grid::new(100).unwrap();
        let t = 0.01;
        let full = KernelCache::neumann(t, grid).unwrap();
        let trunc = KernelCache::truncated(t, grid, 0.5).unwrap();
        for i in 0..grid.m() {
            for j in 0..grid.m() {
                assert!(
                    trunc.entry(i, j) <= full.entry(i, j) + 1e-12,
                    "entry ({i},{j})"
                );
            }
        }
        // density supported on [0, 0.5] loses mass through the cut
        let mut vals = vec![0.0; grid.m()];
        for (i, v) in vals.iter_mut().enumerate().take(50) {
            *v = 1.0 + (i as f64) * 0.01;
        }
        let u = MeasureU::new(grid, 0.0, vals.clone()).unwrap();
        let out = trunc.apply_kernel(&u).unwrap();
        assert!(grid.mass(&out) < grid.mass(&vals) - 1e-6);
        // escape functionals account for exactly the lost mass
        let escaped: f64 = trunc
            .escape_row()
            .iter()
            .zip(&vals)
            .map(|(e, v)| e * v)
            .sum();
        assert_abs_diff_eq!(
            grid.mass(&vals) - grid.mass(&out),
            escaped,
            epsilon = 1e-10
        );
    }

    #[test]
    fn truncated_rejects_unsupported_density() {
        let grid = Grid::new(40).unwrap();
        let trunc = KernelCache::truncated(0.01, grid, 0.5).unwrap();
        let u = MeasureU::new(grid, 0.0, vec![1.0; grid.m()]).unwrap();
        assert!(trunc.apply_kernel(&u).is_err());
    }

    #[test]
    fn dirichlet_matrix_matches_pointwise() {
        let grid = Grid::new(80).unwrap();
        let half = 0.5;
        let t = 0.02;
        let cache = KernelCache::dirichlet(t, grid, half).unwrap();
        let hd = 2.0 * half / grid.m() as f64;
        for (i, j) in [(40, 40), (10, 60), (0, 0)] {
            let ri = -half + (i as f64 + 0.5) * hd;
            let rj = -half + (j as f64 + 0.5) * hd;
            let want = dirichlet_green(t, ri, rj, half).unwrap() * hd;
            assert_abs_diff_eq!(cache.entry(i, j), want, epsilon = 2e-4);
        }
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let g1 = Grid::new(40).unwrap();
        let g2 = Grid::new(50).unwrap();
        let cache = KernelCache::neumann(0.1, g1).unwrap();
        let u = MeasureU::new(g2, 0.0, vec![1.0; 50]).unwrap();
        assert!(matches!(
            cache.apply_kernel(&u),
            Err(CoreError::ShapeMismatch(_))
        ));
    }
}
