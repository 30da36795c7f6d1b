//! Green-function identities: conservation, image/series agreement,
//! semigroup composition, and the resolvent potential.

use crate::config::ValidatedConfig;
use crate::report::{row, Check, Report};
use currents::kernels::*;
use currents::Result;

pub fn run(v: &ValidatedConfig, report: &mut Report) -> Result<()> {
    let cfg = &v.cfg;
    let grid = v.grid;
    let m = grid.m();

    // Row sums of the mass-conserving kernel.
    let mut conservation_rows = Vec::new();
    let mut worst_row: f64 = 0.0;
    for &t in &[1e-3, 1e-2, 0.1] {
        let cache = KernelCache::neumann(t, grid)?;
        let mut defect: f64 = 0.0;
        for i in 0..m {
            let s: f64 = (0..m).map(|j| cache.entry(i, j)).sum();
            defect = defect.max((s - 1.0).abs());
        }
        worst_row = worst_row.max(defect);
        conservation_rows.push(row(&[t, defect]));
    }
    report.write_csv(
        "conservation.csv",
        "t,max_row_sum_defect",
        "t: kernel time; defect: dimensionless",
        conservation_rows,
    )?;
    report.push(Check::less_eq(
        "row_sum_defect",
        worst_row,
        cfg.threshold("row_sum_defect", 1e-8),
    ));

    // Image sum against eigen-series on a time sweep and a 10x10 point grid.
    let mut cross_rows = Vec::new();
    let mut worst_cross: f64 = 0.0;
    for &t in &[1e-3, 3e-3, 1e-2, 0.05, 0.2, 0.5, 1.0, 3.0, 10.0] {
        let mut diff: f64 = 0.0;
        for i in 0..10 {
            for j in 0..10 {
                let r = i as f64 / 9.0;
                let r2 = j as f64 / 9.0;
                let a = neumann_green_images(t, r, r2)?;
                let b = neumann_green_series(t, r, r2)?;
                diff = diff.max((a - b).abs());
            }
        }
        worst_cross = worst_cross.max(diff);
        cross_rows.push(row(&[t, diff]));
    }
    report.write_csv(
        "cross_check.csv",
        "t,max_abs_difference",
        "t: kernel time; difference: density per unit length",
        cross_rows,
    )?;
    report.push(Check::less_eq(
        "representation_agreement",
        worst_cross,
        cfg.threshold("representation_agreement", 1e-8),
    ));

    // Two half steps against one full step on a smooth density.
    let t_half = 0.25;
    let one = KernelCache::neumann(t_half, grid)?;
    let two = KernelCache::neumann(2.0 * t_half, grid)?;
    let smooth: Vec<f64> = (0..m)
        .map(|i| 1.0 + 0.5 * (std::f64::consts::PI * grid.mid(i)).cos())
        .collect();
    let once = two.apply_values(&smooth)?;
    let twice = one.apply_values(&one.apply_values(&smooth)?)?;
    let semigroup = once
        .iter()
        .zip(&twice)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    report.push(Check::less_eq(
        "semigroup_defect",
        semigroup,
        cfg.threshold("semigroup_defect", 1e-6),
    ));

    // Time integral of the absorbing kernel against the tent potential.
    let half_width = 0.5;
    let mut resolvent_rows = Vec::new();
    let mut worst_res: f64 = 0.0;
    for &r in &[0.0, 0.25, 0.45] {
        let value = dirichlet_resolvent_origin(half_width, r, 20.0, 1e-8)?;
        let target = half_width - r.abs();
        let err = (value - target).abs();
        worst_res = worst_res.max(err);
        resolvent_rows.push(row(&[r, value, target, err]));
    }
    report.write_csv(
        "resolvent.csv",
        "r,value,target,abs_error",
        "r: position; value/target: potential (length units)",
        resolvent_rows,
    )?;
    report.push(Check::less_eq(
        "resolvent_error",
        worst_res,
        cfg.threshold("resolvent_error", 1e-3),
    ));
    Ok(())
}
