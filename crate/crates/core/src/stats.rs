//! Kolmogorov-Smirnov distances for empirical distributions.

/// One-sample KS distance `sup_x |F_n(x) - F(x)|` against a reference CDF.
/// Handles tied samples: at each distinct value the empirical CDF jumps,
/// and both the pre- and post-jump gaps are examined.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).expect("no NaN samples"));
    let n = xs.len() as f64;
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        let f = cdf(x);
        let below = i as f64 / n; // F_n just left of x
        let above = j as f64 / n; // F_n at x
        worst = worst.max((f - below).abs()).max((above - f).abs());
        i = j;
    }
    worst
}

/// Two-sample KS distance `sup_x |F_n(x) - G_m(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_unstable_by(|p, q| p.partial_cmp(q).expect("no NaN samples"));
    ys.sort_unstable_by(|p, q| p.partial_cmp(q).expect("no NaN samples"));
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let mut worst: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < xs.len() || j < ys.len() {
        let x = match (xs.get(i), ys.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => break,
        };
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        worst = worst.max((i as f64 / n - j as f64 / m).abs());
    }
    worst
}

/// Asymptotic 5% critical value for the one-sample statistic.
pub fn ks_critical_5pct(n: usize) -> f64 {
    1.36 / (n as f64).sqrt()
}

/// Asymptotic 5% critical value for the two-sample statistic.
pub fn ks_two_sample_critical_5pct(n: usize, m: usize) -> f64 {
    1.36 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}
