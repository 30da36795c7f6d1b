//! Stationary fixed points: residuals, mass balance, monotonicity in the
//! edge, and the small-step linear limits for both edge modes.

use crate::config::ValidatedConfig;
use crate::report::{row, Check, Report};
use currents::stationary::*;
use currents::Result;

pub fn run(v: &ValidatedConfig, report: &mut Report) -> Result<()> {
    let cfg = &v.cfg;
    let grid = v.grid;
    let j = cfg.j;
    let r_values = cfg.r_values.clone().expect("validated");
    let r_edge = cfg.r_edge.expect("validated");
    let a_coeff = cfg.edge_a.expect("validated");
    let delta_min = cfg
        .delta_ladder
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);

    // Fixed points across the edge scan at the finest step.
    let mut fixed_rows = Vec::new();
    let mut worst_residual: f64 = 0.0;
    let mut worst_balance: f64 = 0.0;
    let mut profiles = Vec::new();
    for &r in &r_values {
        let spec = StationarySpec::new(EdgeMode::Fixed(r), delta_min, j, cfg.tail_tol)?;
        let profile = stationary_series(&spec, grid)?;
        let residual = fixed_point_residual(&profile)?;
        let balance = mass_balance_defect(&profile)?;
        worst_residual = worst_residual.max(residual);
        worst_balance = worst_balance.max(balance);
        fixed_rows.push(row(&[
            r,
            delta_min,
            profile.iterations as f64,
            residual,
            balance,
            profile.mass(),
        ]));
        profiles.push((r, profile));
    }
    report.write_csv(
        "fixed_point.csv",
        "r_edge,delta,iterations,residual_sup,mass_balance_defect,mass",
        "residual/defect: density and mass units; mass: dimensionless",
        fixed_rows,
    )?;
    report.push(Check::less_eq(
        "fixed_point_residual",
        worst_residual,
        cfg.threshold("fixed_point_residual", 1e-7),
    ));
    report.push(Check::less_eq(
        "mass_balance_defect",
        worst_balance,
        cfg.threshold("mass_balance_defect", 1e-6),
    ));

    // Densities must grow with the edge on the common support.
    let mut monotone = true;
    for w in profiles.windows(2) {
        let (r_small, small) = &w[0];
        let (_, large) = &w[1];
        for i in 0..grid.m() {
            if grid.left(i) + grid.h() <= *r_small
                && large.values()[i] < small.values()[i] - 1e-12
            {
                monotone = false;
            }
        }
    }
    report.push(Check::is_true("monotone_in_edge", monotone));

    // Fixed-edge ladder against the linear limit, with the full profiles.
    // The sup errors are taken over the margin-trimmed window; the CSV
    // carries every in-support cell.
    let mut profile_rows = Vec::new();
    let mut fixed_sup_errs = Vec::new();
    for &delta in &cfg.delta_ladder {
        let spec = StationarySpec::new(EdgeMode::Fixed(r_edge), delta, j, cfg.tail_tol)?;
        let profile = stationary_series(&spec, grid)?;
        let hi = r_edge - boundary_margin(delta, r_edge);
        let mut sup_err = 0.0f64;
        for i in 0..grid.m() {
            let r = grid.mid(i);
            if r > r_edge {
                break;
            }
            let target = 2.0 * j * (r_edge - r);
            let rho = profile.value_at(r);
            let err = (rho - target).abs();
            if r <= hi {
                sup_err = sup_err.max(err);
            }
            profile_rows.push(row(&[delta, r, rho, target, err]));
        }
        fixed_sup_errs.push((delta, boundary_margin(delta, r_edge), sup_err, profile.edge_value()));
    }
    report.write_csv(
        "profiles.csv",
        "delta,r,rho,target,abs_error",
        "rho/target: density for the fixed-edge ladder",
        profile_rows,
    )?;
    let mut limit_rows = Vec::new();
    for (delta, kappa, sup_err, edge_value) in &fixed_sup_errs {
        limit_rows.push(format!(
            "fixed,{}",
            row(&[*delta, *kappa, *sup_err, *edge_value])
        ));
    }
    let fixed_monotone = fixed_sup_errs.windows(2).all(|w| w[1].2 <= w[0].2 + 1e-9);
    let fixed_final = fixed_sup_errs.last().map_or(f64::INFINITY, |r| r.2);
    report.push(Check::is_true("ladder_monotone", fixed_monotone));
    report.push(Check::less_eq(
        "final_sup_err",
        fixed_final,
        cfg.threshold("final_sup_err", 0.05),
    ));

    // Shrinking-layer ladder.
    let layer_rungs =
        linear_limit_check(EdgeMode::Layer(a_coeff), &cfg.delta_ladder, j, grid, cfg.tail_tol)?;
    for rung in &layer_rungs {
        limit_rows.push(format!(
            "layer,{}",
            row(&[rung.delta, rung.kappa, rung.sup_err, rung.edge_value])
        ));
    }
    report.write_csv(
        "linear_limit.csv",
        "mode,delta,kappa,sup_err,edge_value",
        "kappa: excluded margin (length); sup_err/edge_value: density",
        limit_rows,
    )?;
    let layer_monotone = layer_rungs
        .windows(2)
        .all(|w| w[1].sup_err <= w[0].sup_err + 1e-9);
    let layer_final = layer_rungs.last().map_or(f64::INFINITY, |r| r.sup_err);
    let edge_err = layer_rungs
        .last()
        .map_or(f64::INFINITY, |r| (r.edge_value - j / a_coeff).abs());
    report.push(Check::is_true("layer_ladder_monotone", layer_monotone));
    report.push(Check::less_eq(
        "layer_final_sup_err",
        layer_final,
        cfg.threshold("layer_final_sup_err", 0.08),
    ));
    report.push(Check::less_eq(
        "edge_value_error",
        edge_err,
        cfg.threshold("edge_value_error", 0.1),
    ));
    Ok(())
}
