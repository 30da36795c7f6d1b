//! Seeded, splittable random streams for reproducible replica runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One independent stream per replica: same `(seed, replica)` always yields
/// the same stream, and distinct replicas never share state, so replicas can
/// run in any order or in parallel.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica.wrapping_add(1));
    rng
}

/// Exponential waiting time with the given rate, via inverse CDF.
pub fn exp_time(rng: &mut impl Rng, rate: f64) -> f64 {
    debug_assert!(rate > 0.0);
    let u: f64 = rng.gen::<f64>();
    // 1-u ∈ (0, 1], so the log is finite.
    -(1.0 - u).ln() / rate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let a: Vec<u64> = {
            let mut r = replica_rng(7, 3);
            (0..8).map(|_| r.gen()).collect()
        };
        let b: Vec<u64> = {
            let mut r = replica_rng(7, 3);
            (0..8).map(|_| r.gen()).collect()
        };
        let c: Vec<u64> = {
            let mut r = replica_rng(7, 4);
            (0..8).map(|_| r.gen()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn exp_time_mean_matches_rate() {
        let mut rng = replica_rng(0, 0);
        let n = 20_000;
        let mean: f64 = (0..n).map(|_| exp_time(&mut rng, 4.0)).sum::<f64>() / n as f64;
        assert!((mean - 0.25).abs() < 0.01, "mean {mean}");
    }
}
