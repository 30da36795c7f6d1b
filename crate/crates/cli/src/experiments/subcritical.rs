//! Profile shape at intermediate horizons `eps^{-2} t_eps` with
//! `t_eps = eps^{-1/2}`: long enough that the shape settles onto the linear
//! family, short enough that the rescaled mass should not move in the limit.

use crate::config::ValidatedConfig;
use crate::report::{row, Check, Report};
use currents::lattice::*;
use currents::profile::linear_suffix_mass;
use currents::sim::*;
use currents::Result;

pub fn run(v: &ValidatedConfig, report: &mut Report) -> Result<()> {
    let cfg = &v.cfg;
    let params = v.lattice();
    let eps = params.eps();
    let j = cfg.j;
    let mass = cfg.mass.expect("validated");
    let replicas = cfg.replicas.expect("validated");
    let t_eps = eps.powf(-0.5);
    let horizon = t_eps / (eps * eps);
    let n0 = (mass / eps).round() as u64;

    let metrics: Vec<(f64, f64, f64)> = run_replicas(replicas, cfg.seed, |_, rng| {
        let cfg0 = build_from_count(&params, n0).expect("count fits the cap");
        let mut state = SimState::new(params, cfg0, rng);
        let snaps = state.run_sampling(&[horizon]);
        let snap = &snaps[0];
        let fixed = hydrodynamic_gap_fn(snap, |r| linear_suffix_mass(mass, j, r), &params);
        let mass_now = eps * snap.total as f64;
        let matched =
            hydrodynamic_gap_fn(snap, |r| linear_suffix_mass(mass_now, j, r), &params);
        (fixed, matched, mass_now)
    });

    let rows = metrics
        .iter()
        .enumerate()
        .map(|(i, (f, m, mm))| row(&[i as f64, *f, *m, *mm]));
    report.write_csv(
        "gaps.csv",
        "replica,max_gap_fixed_target,max_gap_mass_matched,final_mass",
        "gaps and mass: macroscopic units",
        rows,
    )?;

    let n = metrics.len() as f64;
    let mean_fixed = metrics.iter().map(|m| m.0).sum::<f64>() / n;
    let mean_matched = metrics.iter().map(|m| m.1).sum::<f64>() / n;
    let mean_drift = metrics.iter().map(|m| (m.2 - mass).abs()).sum::<f64>() / n;
    report.push(Check::less_eq(
        "mean_gap_fixed_target",
        mean_fixed,
        cfg.threshold("mean_gap_fixed_target", 0.07),
    ));
    // At this horizon the mass drift scales like sqrt(2 j eps t_eps) and the
    // shape noise like sqrt(eps·mass); both are reported so the fixed-target
    // gap can be decomposed.
    report.push(Check::less_eq("mean_mass_drift", mean_drift, f64::INFINITY).info());
    report.push(
        Check::less_eq(
            "mean_gap_mass_matched",
            mean_matched,
            cfg.threshold("mean_gap_fixed_target", 0.07),
        )
        .info(),
    );
    Ok(())
}
