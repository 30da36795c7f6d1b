//! The mass marginal of the full simulator against the standalone reflected
//! count walk, plus an optional null calibration of the KS machinery.

use crate::config::ValidatedConfig;
use crate::experiments::stream_offset;
use crate::report::{row, Check, Report};
use currents::lattice::*;
use currents::mass::*;
use currents::sim::*;
use currents::stats::*;
use currents::Result;

pub fn run(v: &ValidatedConfig, report: &mut Report) -> Result<()> {
    let cfg = &v.cfg;
    let params = v.lattice();
    let eps = params.eps();
    let j = cfg.j;
    let mass = cfg.mass.expect("validated");
    let horizon = cfg.horizon_t.expect("validated") / (eps * eps);
    let replicas = cfg.replicas.expect("validated");
    let n0 = (mass / eps).round() as u64;

    let sim_mass: Vec<f64> = run_replicas(replicas, cfg.seed, |_, rng| {
        let cfg0 = build_from_count(&params, n0).expect("count fits the cap");
        let mut state = SimState::new(params, cfg0, rng);
        state.run_until(horizon);
        eps * state.cfg.total() as f64
    });
    let walk_mass: Vec<f64> = run_replicas(replicas, stream_offset(cfg.seed), |_, mut rng| {
        eps * mass_walk_final(n0, eps, j, horizon, &mut rng) as f64
    });

    let rows = (0..replicas).map(|i| row(&[i as f64, sim_mass[i], walk_mass[i]]));
    report.write_csv(
        "samples.csv",
        "replica,sim_mass,walk_mass",
        "masses: macroscopic units",
        rows,
    )?;

    let d = ks_two_sample(&sim_mass, &walk_mass);
    report.push(Check::less_eq(
        "ks_two_sample",
        d,
        cfg.threshold("ks_two_sample", 0.08),
    ));
    report.push(
        Check::less_eq(
            "ks_two_sample_critical_5pct",
            d,
            ks_two_sample_critical_5pct(replicas, replicas),
        )
        .info(),
    );

    if cfg.calibrate_oracle {
        // Samples drawn from the folded normal itself should beat the 5%
        // critical distance in about 19 of 20 meta-replicas.
        let meta = 50usize;
        let per = 200usize;
        let sigma2 = mass_marginal_sigma2(j, cfg.horizon_t.expect("validated"));
        let mut passes = 0usize;
        for rep in 0..meta {
            let mut rng =
                currents::rng::replica_rng(stream_offset(cfg.seed ^ 0xca11), rep as u64);
            let samples: Vec<f64> = (0..per)
                .map(|_| folded_normal_sample(&mut rng, mass, sigma2))
                .collect();
            let d = ks_one_sample(&samples, |x| folded_normal_cdf(x, mass, sigma2));
            if d <= ks_critical_5pct(per) {
                passes += 1;
            }
        }
        report.push(Check::greater_eq(
            "oracle_calibration_pass_rate",
            passes as f64 / meta as f64,
            cfg.threshold("oracle_calibration_pass_rate", 0.9),
        ));
    }
    Ok(())
}
