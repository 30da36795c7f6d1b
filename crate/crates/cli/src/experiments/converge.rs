//! Barrier dynamics: the squeeze between the two evolutions, invariance of
//! the linear profiles, and convergence toward them.

use crate::config::ValidatedConfig;
use crate::report::{row, Check, Report};
use currents::barriers::*;
use currents::Result;

pub fn run(v: &ValidatedConfig, report: &mut Report) -> Result<()> {
    let cfg = &v.cfg;
    let grid = v.grid;
    let j = cfg.j;
    let mass = cfg.mass.expect("validated");
    let t_squeeze = cfg.horizon_t.expect("validated");

    // Gap between the barriers as the step count doubles.
    let u0 = MeasureU::uniform(grid, mass)?;
    let mut squeeze_rows = Vec::new();
    let mut prev_gap = f64::NAN;
    let mut worst_ratio: f64 = 0.0;
    let mut worst_order: f64 = 0.0;
    for n in 1..=8u32 {
        let pair = BarrierPair::run(&u0, t_squeeze, n, j)?;
        let gap = pair.sup_f_gap();
        let ratio = if prev_gap.is_finite() { gap / prev_gap } else { f64::NAN };
        if ratio.is_finite() {
            worst_ratio = worst_ratio.max(ratio);
        }
        worst_order = worst_order.max(pair.worst_order_defect);
        squeeze_rows.push(row(&[
            n as f64,
            pair.delta,
            gap,
            if ratio.is_finite() { ratio } else { -1.0 },
            pair.worst_order_defect.max(0.0),
        ]));
        prev_gap = gap;
    }
    report.write_csv(
        "squeeze.csv",
        "n,delta,sup_f_gap,ratio_to_previous,order_defect",
        "gap: mass units; ratio: dimensionless (-1 on the first row)",
        squeeze_rows,
    )?;
    report.push(Check::less_eq(
        "squeeze_ratio_max",
        worst_ratio,
        cfg.threshold("squeeze_ratio_max", 0.7),
    ));
    report.push(Check::less_eq(
        "order_defect",
        worst_order,
        cfg.threshold("order_defect", 1e-10),
    ));

    // Linear profiles must be held fixed by the squeezed evolution.
    let mut manifold_rows = Vec::new();
    let mut worst_manifold: f64 = 0.0;
    for &m_mass in &[0.25, 1.0, 2.0] {
        let profile = linear_profile(m_mass, j, grid)?;
        let sep = separating_element(&profile, 1.0, j, 0.004)?;
        let dist = sup_f_distance_to(&sep.density, |r| linear_profile_f(m_mass, j, r));
        worst_manifold = worst_manifold.max(dist);
        manifold_rows.push(row(&[m_mass, dist, sep.gap, sep.doublings as f64]));
    }
    report.write_csv(
        "manifold.csv",
        "mass,sup_f_distance,barrier_gap,doublings",
        "distance/gap: mass units",
        manifold_rows,
    )?;
    report.push(Check::less_eq(
        "manifold_dist_max",
        worst_manifold,
        cfg.threshold("manifold_dist_max", 0.01),
    ));

    // Relaxation from a uniform start toward the linear profile of the same
    // mass. The barrier tolerance tightens with the horizon so the shrinking
    // distances stay resolved.
    let times = cfg.times.clone().expect("validated");
    let mut distance_rows = Vec::new();
    let mut dists = Vec::new();
    let mut last_profile = None;
    for &t in &times {
        let tol = (0.004_f64).min(0.002 / t);
        let sep = separating_element(&u0, t, j, tol)?;
        let dist = sup_f_distance_to(&sep.density, |r| linear_profile_f(mass, j, r));
        distance_rows.push(row(&[t, dist, tol, sep.gap, sep.doublings as f64]));
        dists.push(dist);
        last_profile = Some(sep.density);
    }
    if let Some(profile) = last_profile {
        let profile_rows = profile
            .profile_rows()
            .into_iter()
            .map(|(r, rho, f)| row(&[r, rho, f]));
        report.write_csv(
            "profile_final.csv",
            "r,rho,suffix_mass",
            "r: position; rho: density; suffix_mass: mass in [r, 1]",
            profile_rows,
        )?;
    }
    report.write_csv(
        "distance.csv",
        "t,sup_f_distance,barrier_tol,barrier_gap,doublings",
        "t: macroscopic time; distance: mass units",
        distance_rows,
    )?;
    let strictly_decreasing = dists.windows(2).all(|w| w[1] < w[0]);
    report.push(Check::is_true("convergence_monotone", strictly_decreasing));
    report.push(Check::less_eq(
        "final_distance",
        dists.last().copied().unwrap_or(f64::INFINITY),
        cfg.threshold("final_distance", 0.02),
    ));
    Ok(())
}
