//! Two-process coupling: ensemble decay of the discrepancy count and the
//! pathwise L1 bound.

use crate::config::ValidatedConfig;
use crate::report::{row, Check, Report};
use currents::couple::LabeledPair;
use currents::lattice::*;
use currents::profile::ProfileSpec;
use currents::sim::run_replicas;
use currents::Result;

fn positions(cfg: &ParticleConfig) -> Vec<usize> {
    let mut v = Vec::with_capacity(cfg.total() as usize);
    for (site, &c) in cfg.counts().iter().enumerate() {
        for _ in 0..c {
            v.push(site);
        }
    }
    v
}

pub fn run(v: &ValidatedConfig, report: &mut Report) -> Result<()> {
    let cfg = &v.cfg;
    let params = v.lattice();
    let eps = params.eps();
    let mass = cfg.mass.expect("validated");
    let replicas = cfg.replicas.expect("validated");
    let times = cfg.times.clone().expect("validated");
    let horizons: Vec<f64> = times.iter().map(|t| t / (eps * eps)).collect();

    // Same particle number, different shapes: a flat block against the
    // invariant wedge, labels paired left to right.
    let xs = positions(&build_initial_config(
        &params,
        &ProfileSpec::Uniform { mass },
    )?);
    let ys = positions(&build_initial_config(
        &params,
        &ProfileSpec::Linear { mass, j: cfg.j },
    )?);
    if xs.len() != ys.len() {
        return Err(currents::CoreError::InvalidParams(format!(
            "marginals must start with equal particle numbers, got {} vs {}",
            xs.len(),
            ys.len()
        )));
    }

    type Trace = (Vec<usize>, Vec<u64>, Vec<u64>, usize);
    let traces: Vec<Trace> = run_replicas(replicas, cfg.seed, |_, rng| {
        let mut pair = LabeledPair::new(params, &xs, &ys, rng).expect("positions validated");
        let d0 = pair.discrepancy_count();
        let mut discrepancies = Vec::with_capacity(horizons.len());
        let mut l1 = Vec::with_capacity(horizons.len());
        let mut bounds = Vec::with_capacity(horizons.len());
        for &h in &horizons {
            pair.run_until(h);
            discrepancies.push(pair.discrepancy_count());
            l1.push(pair.l1_distance());
            bounds.push(pair.l1_bound());
        }
        (discrepancies, l1, bounds, d0)
    });

    let mut decay_rows = Vec::new();
    let mut l1_ok = true;
    for (rep, (ds, l1s, bounds, _)) in traces.iter().enumerate() {
        for (k, &t) in times.iter().enumerate() {
            if l1s[k] > bounds[k] {
                l1_ok = false;
            }
            decay_rows.push(row(&[
                rep as f64,
                t,
                ds[k] as f64,
                l1s[k] as f64,
                bounds[k] as f64,
            ]));
        }
    }
    report.write_csv(
        "decay.csv",
        "replica,eps2_t,discrepancies,l1_distance,l1_bound",
        "eps2_t: macroscopic time; counts: particles",
        decay_rows,
    )?;

    let n = traces.len() as f64;
    let means: Vec<f64> = (0..times.len())
        .map(|k| traces.iter().map(|tr| tr.0[k] as f64).sum::<f64>() / n)
        .collect();
    let d0 = traces[0].3 as f64;
    let mut summary_rows = vec![row(&[0.0, d0])];
    for (k, &t) in times.iter().enumerate() {
        summary_rows.push(row(&[t, means[k]]));
    }
    report.write_csv(
        "summary.csv",
        "eps2_t,mean_discrepancies",
        "mean over replicas",
        summary_rows,
    )?;

    // Per-unit decay factor between consecutive observation times; an
    // ensemble that has fully coalesced (0/0) decays trivially.
    let mut worst_ratio: f64 = 0.0;
    let mut with_start = vec![(0.0, d0)];
    with_start.extend(times.iter().cloned().zip(means.iter().cloned()));
    for w in with_start.windows(2) {
        let (t0, d_prev) = w[0];
        let (t1, d_next) = w[1];
        let ratio = if d_prev > 0.0 {
            (d_next / d_prev).powf(1.0 / (t1 - t0))
        } else {
            0.0
        };
        worst_ratio = worst_ratio.max(ratio);
    }
    let monotone = with_start.windows(2).all(|w| w[1].1 <= w[0].1);
    report.push(Check::is_true("mean_decay_monotone", monotone));
    report.push(Check::less_eq(
        "decay_ratio_per_unit",
        worst_ratio,
        cfg.threshold("decay_ratio_per_unit", 0.8),
    ));
    report.push(Check::is_true("l1_bound_ok", l1_ok));
    Ok(())
}
