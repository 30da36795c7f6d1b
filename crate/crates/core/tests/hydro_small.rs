//! End-to-end: the simulator's rescaled suffix counts track the barrier
//! solver's separating element from the same initial profile, at a small
//! desk scale.

use currents::barriers::{separating_element, MeasureU};
use currents::kernels::Grid;
use currents::lattice::{build_initial_config, LatticeParams};
use currents::profile::ProfileSpec;
use currents::sim::{hydrodynamic_gap, run_replicas, SimState, Snapshot};

#[test]
fn empirical_profile_tracks_separating_element() {
    let params = LatticeParams::new(100, 1.0).unwrap();
    let eps = params.eps();
    let t = 0.3;
    let horizon = t / (eps * eps);
    let grid = Grid::new(200).unwrap();

    // a non-invariant start: uniform density of mass 0.3
    let spec = ProfileSpec::Uniform { mass: 0.3 };
    let base = build_initial_config(&params, &spec).unwrap();
    let u0 = MeasureU::uniform(grid, 0.3).unwrap();
    let sep = separating_element(&u0, t, 1.0, 0.004).unwrap();

    let gaps: Vec<f64> = run_replicas(24, 30, |_, rng| {
        let mut state = SimState::new(params, base.clone(), rng);
        let snaps = state.run_sampling(&[horizon]);
        hydrodynamic_gap(&snaps[0], &sep.density, &params)
    });
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    // mass noise at this scale is sqrt(2*t*eps) ≈ 0.077; the profile error
    // adds less: the comparison should land well under 0.15
    assert!(
        mean <= 0.15,
        "mean gap {mean:.4} against the macroscopic profile"
    );

    // and the gap at time zero is pure rounding
    let initial = Snapshot::take(0.0, &base);
    let gap0 = hydrodynamic_gap(&initial, &u0, &params);
    assert!(gap0 <= eps + 1e-12, "initial gap {gap0}");
}
