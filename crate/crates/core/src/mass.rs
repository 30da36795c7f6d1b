//! Dynamics and statistics of the total particle count.
//!
//! The count performs a continuous-time walk: after an exponential time of
//! parameter `2jε` it moves by ±1 with equal probability, with the step to
//! −1 suppressed at the origin (the state holds, time still advances).
//! Diffusively rescaled (`M = ε·count` at times `ε^{-3} t`) the walk
//! converges in law to Brownian motion on `R_+` reflected at the origin;
//! its single-time marginal is the folded normal used as the oracle here.
//! The variance of that marginal at macroscopic time `t` is `2jt`: the
//! walk jumps at rate `2jε` with unit squared increments, so the rescaled
//! variance is `ε² · 2jε · ε^{-3} t`.

use crate::error::{CoreError, Result};
use crate::kernels::norm_cdf;
use crate::rng::exp_time;
use crate::stats::ks_one_sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One move of the reflected count walk: returns the waiting time and the
/// new count. At zero the downward move is suppressed but still consumes
/// its waiting time.
pub fn mass_walk_step(n: u64, eps: f64, j: f64, rng: &mut ChaCha8Rng) -> (f64, u64) {
    let dt = exp_time(rng, 2.0 * j * eps);
    let up = rng.gen::<bool>();
    let next = if up {
        n + 1
    } else {
        n.saturating_sub(1) // n = 0: hold
    };
    (dt, next)
}

/// Walk the count to `t_end` and return the final state.
pub fn mass_walk_final(n0: u64, eps: f64, j: f64, t_end: f64, rng: &mut ChaCha8Rng) -> u64 {
    let mut n = n0;
    let mut clock = 0.0;
    loop {
        let (dt, next) = mass_walk_step(n, eps, j, rng);
        clock += dt;
        if clock >= t_end {
            return n;
        }
        n = next;
    }
}

/// A sampled count trajectory with its scale parameters.
#[derive(Debug, Clone)]
pub struct MassPath {
    pub times: Vec<f64>,
    pub values: Vec<u64>,
    pub eps: f64,
    pub j: f64,
}

impl MassPath {
    /// Walk the count along the given (sorted) sample times.
    pub fn sample(
        n0: u64,
        eps: f64,
        j: f64,
        sample_times: &[f64],
        rng: &mut ChaCha8Rng,
    ) -> MassPath {
        let mut values = Vec::with_capacity(sample_times.len());
        let mut n = n0;
        let mut clock = 0.0;
        let mut pending: Option<(f64, u64)> = None;
        for &t in sample_times {
            loop {
                let (event_time, next) = match pending.take() {
                    Some(p) => p,
                    None => {
                        let (dt, next) = mass_walk_step(n, eps, j, rng);
                        (clock + dt, next)
                    }
                };
                if event_time >= t {
                    pending = Some((event_time, next));
                    break;
                }
                clock = event_time;
                n = next;
            }
            values.push(n);
        }
        MassPath {
            times: sample_times.to_vec(),
            values,
            eps,
            j,
        }
    }

    /// Rescaled values `ε·count`.
    pub fn rescaled(&self) -> Vec<f64> {
        self.values.iter().map(|&v| self.eps * v as f64).collect()
    }
}

/// CDF of the reflected-Brownian-motion marginal started at `m ≥ 0`:
/// `Φ((x-m)/σ) - Φ((-x-m)/σ)` for `x ≥ 0`, zero below.
pub fn folded_normal_cdf(x: f64, m: f64, sigma2: f64) -> f64 {
    debug_assert!(sigma2 > 0.0);
    if x < 0.0 {
        return 0.0;
    }
    let s = sigma2.sqrt();
    norm_cdf((x - m) / s) - norm_cdf((-x - m) / s)
}

/// Variance of the rescaled-count marginal at macroscopic time `t`.
pub fn mass_marginal_sigma2(j: f64, t: f64) -> f64 {
    2.0 * j * t
}

/// Verdict of a distributional test.
#[derive(Debug, Clone)]
pub struct KsVerdict {
    pub statistic: f64,
    pub threshold: f64,
    pub n: usize,
    pub pass: bool,
}

/// One-sample KS test of rescaled masses against the reflected-motion
/// marginal with start `m` and horizon `t`. Needs at least 100 replicas.
pub fn supercritical_mass_test(
    samples: &[f64],
    m: f64,
    j: f64,
    t: f64,
    threshold: f64,
) -> Result<KsVerdict> {
    if samples.len() < 100 {
        return Err(CoreError::InsufficientData {
            needed: 100,
            got: samples.len(),
        });
    }
    if !(t > 0.0) {
        return Err(CoreError::Domain(
            "degenerate horizon: all mass sits at the start point, nothing to test".into(),
        ));
    }
    let sigma2 = mass_marginal_sigma2(j, t);
    let statistic = ks_one_sample(samples, |x| folded_normal_cdf(x, m, sigma2));
    Ok(KsVerdict {
        statistic,
        threshold,
        n: samples.len(),
        pass: statistic <= threshold,
    })
}

/// Which time scale a tightness check runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Horizon `ε^{-2} T`: the rescaled count must not move.
    Hydrodynamic,
    /// Horizon `ε^{-3} T`: the rescaled count must stay bounded.
    Super,
}

#[derive(Debug, Clone)]
pub struct TightnessReport {
    pub regime: Regime,
    /// Fraction of replicas satisfying the regime's containment event.
    pub fraction: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Containment checks for the two scales: on hydrodynamic horizons
/// `P[|εx_t - εx_0| ≤ δ] ≥ 1-δ`, on super-hydrodynamic horizons
/// `P[εx_t ≥ bound] ≤ δ`.
pub fn tightness_check(
    start_end: &[(f64, f64)],
    regime: Regime,
    delta: f64,
    super_bound: f64,
) -> Result<TightnessReport> {
    if start_end.is_empty() {
        return Err(CoreError::InsufficientData { needed: 1, got: 0 });
    }
    let n = start_end.len() as f64;
    match regime {
        Regime::Hydrodynamic => {
            let good = start_end
                .iter()
                .filter(|(a, b)| (a - b).abs() <= delta)
                .count() as f64;
            let fraction = good / n;
            Ok(TightnessReport {
                regime,
                fraction,
                threshold: 1.0 - delta,
                pass: fraction >= 1.0 - delta,
            })
        }
        Regime::Super => {
            let escaped = start_end.iter().filter(|(_, b)| *b >= super_bound).count() as f64;
            let fraction = escaped / n;
            Ok(TightnessReport {
                regime,
                fraction,
                threshold: delta,
                pass: fraction <= delta,
            })
        }
    }
}

/// Draw from the folded normal by inverse-CDF sampling.
pub fn folded_normal_sample(rng: &mut ChaCha8Rng, m: f64, sigma2: f64) -> f64 {
    let u: f64 = rng.gen::<f64>();
    folded_normal_quantile(u.clamp(1e-12, 1.0 - 1e-12), m, sigma2)
}

/// Upper quantile of the folded normal, by bisection on the CDF.
pub fn folded_normal_quantile(p: f64, m: f64, sigma2: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&p));
    let (mut lo, mut hi) = (0.0, m + 20.0 * sigma2.sqrt());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if folded_normal_cdf(mid, m, sigma2) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;
    use approx::assert_abs_diff_eq;

    #[test]
    fn folded_cdf_reference_values() {
        // m = 0, x = σ: 2Φ(1) - 1
        assert_abs_diff_eq!(
            folded_normal_cdf(1.0, 0.0, 1.0),
            0.6826894921370859,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(folded_normal_cdf(1e9, 0.3, 2.0), 1.0, epsilon = 1e-12);
        assert_eq!(folded_normal_cdf(-0.5, 1.0, 1.0), 0.0);
        // far from the origin the reflection term is negligible
        let plain = norm_cdf((2.5_f64 - 20.0) / 1.0);
        assert_abs_diff_eq!(folded_normal_cdf(2.5, 20.0, 1.0), plain, epsilon = 1e-6);
    }

    #[test]
    fn walk_at_zero_moves_up_or_holds() {
        let mut rng = replica_rng(1, 0);
        let mut ups = 0;
        let mut holds = 0;
        for _ in 0..4000 {
            let (_, next) = mass_walk_step(0, 0.02, 1.0, &mut rng);
            match next {
                0 => holds += 1,
                1 => ups += 1,
                _ => panic!("impossible move"),
            }
        }
        let (u, h) = (ups as f64, holds as f64);
        let chi = (u - h) * (u - h) / (u + h);
        assert!(chi < 6.635, "ups {ups} holds {holds}");
    }

    #[test]
    fn walk_is_martingale_away_from_zero() {
        let mut rng = replica_rng(2, 0);
        let n0 = 1000u64;
        let horizon = 200.0;
        let reps = 2000;
        let mean: f64 = (0..reps)
            .map(|_| mass_walk_final(n0, 0.05, 1.0, horizon, &mut rng) as f64)
            .sum::<f64>()
            / reps as f64;
        // variance per replica = 2jε·T = 20, so the mean of 2000 has σ ≈ 0.1
        assert!((mean - n0 as f64).abs() < 0.5, "mean {mean}");
    }

    #[test]
    fn jump_sign_is_fair_conditionally() {
        let mut rng = replica_rng(3, 0);
        let (mut up, mut down) = (0u64, 0u64);
        for _ in 0..10_000 {
            let (_, next) = mass_walk_step(5, 0.1, 1.0, &mut rng);
            if next == 6 {
                up += 1;
            } else {
                down += 1;
            }
        }
        let (u, d) = (up as f64, down as f64);
        let chi = (u - d) * (u - d) / (u + d);
        assert!(chi < 6.635, "up {up} down {down} chi {chi}");
    }

    #[test]
    fn mass_never_negative_and_reflection_books_balance() {
        let mut rng = replica_rng(4, 0);
        let mut n = 2u64;
        let mut suppressed = 0u64;
        let mut at_zero_draws = 0u64;
        for _ in 0..20_000 {
            let was_zero = n == 0;
            let (_, next) = mass_walk_step(n, 0.05, 1.0, &mut rng);
            if was_zero {
                at_zero_draws += 1;
                if next == 0 {
                    suppressed += 1;
                }
            }
            n = next;
        }
        // suppressed draws happen only at zero and make up about half of them
        assert!(at_zero_draws > 100, "walk never visited zero");
        let frac = suppressed as f64 / at_zero_draws as f64;
        assert!((frac - 0.5).abs() < 0.05, "suppressed fraction {frac}");
    }

    #[test]
    fn ks_calibration_against_own_oracle() {
        // Samples drawn from the folded normal itself fail the 5% critical
        // distance about one meta-replica in twenty; over 100 meta-replicas
        // the failure count should sit near 5 and certainly below 11
        // (binomial 99.8th percentile).
        let n = 400;
        let (m, sigma2) = (1.0, 2.0);
        let mut failures = 0;
        for rep in 0..100 {
            let mut rng = replica_rng(5, rep);
            let samples: Vec<f64> = (0..n)
                .map(|_| {
                    let u: f64 = rng.gen::<f64>();
                    folded_normal_quantile(u.clamp(1e-12, 1.0 - 1e-12), m, sigma2)
                })
                .collect();
            let d = ks_one_sample(&samples, |x| folded_normal_cdf(x, m, sigma2));
            if d > crate::stats::ks_critical_5pct(n) {
                failures += 1;
            }
        }
        assert!(failures <= 10, "{failures} of 100 calibration runs failed");
    }

    #[test]
    fn walk_marginal_matches_folded_normal() {
        // eps = 1/50, m = 1, j = 1, horizon ε^{-3}: the rescaled count is
        // approximately folded-normal with variance 2jt.
        let eps: f64 = 1.0 / 50.0;
        let n0 = 50u64;
        let horizon = (1.0 / eps).powi(3);
        let samples: Vec<f64> = crate::sim::run_replicas(200, 6, |_, mut rng| {
            eps * mass_walk_final(n0, eps, 1.0, horizon, &mut rng) as f64
        });
        let verdict = supercritical_mass_test(&samples, 1.0, 1.0, 1.0, 0.1).unwrap();
        assert!(
            verdict.pass,
            "KS distance {} over threshold {}",
            verdict.statistic, verdict.threshold
        );
    }

    #[test]
    fn walk_variance_pins_the_diffusive_constant() {
        // Away from the reflecting origin, Var(eps·count) at horizon
        // eps^-3·t is 2jt: the walk fires at rate 2j·eps with unit squared
        // steps. 400 replicas estimate the variance to about 7%.
        let eps: f64 = 1.0 / 30.0;
        let (j, t) = (1.0, 1.0);
        let n0 = (5.0 / eps) as u64; // start high enough that 0 is not felt
        let horizon = t / (eps * eps * eps);
        let samples: Vec<f64> = crate::sim::run_replicas(400, 17, |_, mut rng| {
            eps * mass_walk_final(n0, eps, j, horizon, &mut rng) as f64
        });
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
        let want = mass_marginal_sigma2(j, t);
        assert!(
            (var - want).abs() <= 0.35 * want,
            "sample variance {var:.3} vs {want}"
        );
    }

    #[test]
    fn insufficient_replicas_rejected() {
        let err = supercritical_mass_test(&[1.0; 10], 1.0, 1.0, 1.0, 0.1).unwrap_err();
        assert!(matches!(err, CoreError::InsufficientData { .. }));
    }

    #[test]
    fn degenerate_horizon_is_skipped_with_notice() {
        // t = 0 puts all mass at the start point; the comparison is refused
        // rather than run against a zero-variance law.
        let err = supercritical_mass_test(&[1.0; 200], 1.0, 1.0, 0.0, 0.1).unwrap_err();
        assert!(err.to_string().contains("degenerate"), "{err}");
    }

    #[test]
    fn tightness_hydro_and_super() {
        // Hydrodynamic containment: the rescaled drift has σ = √(2jTε), so
        // δ = 0.1 needs ε well below δ²/(2jT); ε = 1/2000 gives σ ≈ 0.032.
        let eps = 1.0 / 2000.0;
        let j = 1.0;
        let horizon_hydro = 1.0 / (eps * eps);
        let pairs: Vec<(f64, f64)> = crate::sim::run_replicas(200, 7, |_, mut rng| {
            let n0 = 1000u64;
            let end = mass_walk_final(n0, eps, j, horizon_hydro, &mut rng);
            (eps * n0 as f64, eps * end as f64)
        });
        let hydro = tightness_check(&pairs, Regime::Hydrodynamic, 0.1, 0.0).unwrap();
        assert!(hydro.pass, "hydro containment fraction {}", hydro.fraction);

        let eps_s: f64 = 1.0 / 20.0;
        let horizon_super = (1.0 / eps_s).powi(3);
        let bound = folded_normal_quantile(0.95, 1.0, mass_marginal_sigma2(j, 1.0)) + 0.5;
        let pairs_s: Vec<(f64, f64)> = crate::sim::run_replicas(200, 8, |_, mut rng| {
            let n0 = 20u64;
            let end = mass_walk_final(n0, eps_s, j, horizon_super, &mut rng);
            (eps_s * n0 as f64, eps_s * end as f64)
        });
        let sup = tightness_check(&pairs_s, Regime::Super, 0.1, bound).unwrap();
        assert!(sup.pass, "super escape fraction {}", sup.fraction);
    }

    #[test]
    fn zero_rate_never_fires_within_horizon() {
        // j tiny: the first waiting time dwarfs the horizon, count constant.
        let mut rng = replica_rng(9, 0);
        let n = mass_walk_final(7, 0.01, 1e-12, 10.0, &mut rng);
        assert_eq!(n, 7);
    }
}
