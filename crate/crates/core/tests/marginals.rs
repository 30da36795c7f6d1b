//! Distributional checks that tie the coupled process, the plain simulator,
//! and the standalone count walk together.

use currents::couple::LabeledPair;
use currents::lattice::{build_from_count, LatticeParams, ParticleConfig};
use currents::mass::mass_walk_final;
use currents::rng::replica_rng;
use currents::sim::{run_replicas, SimState};
use currents::stats::{ks_two_sample, ks_two_sample_critical_5pct};

/// Each coupled marginal is the single-system process in law: compare the
/// rescaled suffix count at a fixed site and time across independent
/// replicas with a two-sample KS test at the 1% level.
#[test]
fn coupled_marginal_matches_single_process_law() {
    let params = LatticeParams::new(20, 1.0).unwrap();
    let eps = params.eps();
    let horizon = 0.5 / (eps * eps);
    let x0 = 7usize;
    let n = 200;

    // coupling started from two different shapes: x-marginal spread low,
    // y-marginal piled at the origin-most sites
    let xs: Vec<usize> = (0..10).map(|i| 2 * i).collect();
    let ys: Vec<usize> = (0..10).map(|i| i / 2).collect();
    let from_couple: Vec<f64> = run_replicas(n, 11, |_, rng| {
        let mut pair = LabeledPair::new(params, &xs, &ys, rng).unwrap();
        pair.run_until(horizon);
        let (xi, _) = pair.configurations();
        eps * xi[x0..].iter().sum::<u64>() as f64
    });

    // plain simulator from exactly the x-marginal's initial configuration
    let from_single: Vec<f64> = run_replicas(n, 12, |_, rng| {
        let mut cfg = ParticleConfig::empty(params.sites());
        for &x in &xs {
            cfg.increment(x);
        }
        let mut state = SimState::new(params, cfg, rng);
        state.run_until(horizon);
        eps * state.cfg.suffix_count(x0).unwrap() as f64
    });

    let d = ks_two_sample(&from_couple, &from_single);
    // 1% asymptotic critical value: 1.63 sqrt(2/n)
    let critical = 1.63 * (2.0 / n as f64).sqrt();
    assert!(
        d <= critical,
        "x-marginal law deviates: KS {d:.4} > {critical:.4}"
    );
}

/// The y-marginal too, including extra labels the x-side does not carry.
#[test]
fn coupled_y_marginal_matches_single_process_law() {
    let params = LatticeParams::new(20, 1.0).unwrap();
    let eps = params.eps();
    let horizon = 0.4 / (eps * eps);
    let x0 = 5usize;
    let n = 200;
    let xs: Vec<usize> = (0..8).map(|i| i % 5).collect();
    let ys: Vec<usize> = (0..11).map(|i| (3 * i) % 17).collect();

    let from_couple: Vec<f64> = run_replicas(n, 13, |_, rng| {
        let mut pair = LabeledPair::new(params, &xs, &ys, rng).unwrap();
        pair.run_until(horizon);
        let (_, eta) = pair.configurations();
        eps * eta[x0..].iter().sum::<u64>() as f64
    });
    let from_single: Vec<f64> = run_replicas(n, 14, |_, rng| {
        let mut cfg = ParticleConfig::empty(params.sites());
        for &y in &ys {
            cfg.increment(y);
        }
        let mut state = SimState::new(params, cfg, rng);
        state.run_until(horizon);
        eps * state.cfg.suffix_count(x0).unwrap() as f64
    });

    let d = ks_two_sample(&from_couple, &from_single);
    let critical = 1.63 * (2.0 / n as f64).sqrt();
    assert!(
        d <= critical,
        "y-marginal law deviates: KS {d:.4} > {critical:.4}"
    );
}

/// The count marginal of the full simulator is exchangeable with the
/// standalone walk in downstream tests.
#[test]
fn simulator_mass_and_walk_are_exchangeable() {
    let params = LatticeParams::new(25, 1.0).unwrap();
    let eps = params.eps();
    let horizon = 0.8 / (eps * eps);
    let n0 = 25u64;
    let n = 300;
    let sim: Vec<f64> = run_replicas(n, 15, |_, rng| {
        let cfg = build_from_count(&params, n0).unwrap();
        let mut state = SimState::new(params, cfg, rng);
        state.run_until(horizon);
        eps * state.cfg.total() as f64
    });
    let walk: Vec<f64> = run_replicas(n, 16, |_, mut rng| {
        eps * mass_walk_final(n0, eps, 1.0, horizon, &mut rng) as f64
    });
    let d = ks_two_sample(&sim, &walk);
    assert!(
        d <= ks_two_sample_critical_5pct(n, n),
        "mass marginal deviates from the walk: KS {d:.4}"
    );
}

/// Determinism of a replica batch does not depend on observation order.
#[test]
fn replica_streams_do_not_interact() {
    let params = LatticeParams::new(10, 1.0).unwrap();
    let single: Vec<u64> = run_replicas(4, 21, |_, rng| {
        let cfg = build_from_count(&params, 5).unwrap();
        let mut state = SimState::new(params, cfg, rng);
        state.run_until(500.0);
        state.cfg.total()
    });
    // replica 2 recomputed in isolation gives the same answer
    let alone = {
        let cfg = build_from_count(&params, 5).unwrap();
        let mut state = SimState::new(params, cfg, replica_rng(21, 2));
        state.run_until(500.0);
        state.cfg.total()
    };
    assert_eq!(single[2], alone);
}
