//! Microscopic configurations on the lattice `{0, ..., 1/eps}`.

use crate::error::{CoreError, Result};
use crate::fenwick::Fenwick;
use crate::profile::ProfileSpec;
use crate::quad::adaptive_simpson;

/// System size and reservoir current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeParams {
    inv_eps: usize,
    j: f64,
}

impl LatticeParams {
    /// `inv_eps` is the number of bonds; sites run over `0..=inv_eps`.
    pub fn new(inv_eps: usize, j: f64) -> Result<Self> {
        if inv_eps < 2 {
            return Err(CoreError::InvalidParams(format!(
                "1/eps must be an integer >= 2, got {inv_eps}"
            )));
        }
        if !j.is_finite() || j <= 0.0 {
            return Err(CoreError::InvalidParams(format!(
                "current j must be positive, got {j}"
            )));
        }
        Ok(LatticeParams { inv_eps, j })
    }

    /// Build from a floating `eps`; rejects values whose reciprocal is not an
    /// integer (within 1e-9).
    pub fn from_eps(eps: f64, j: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0 && eps <= 0.5) {
            return Err(CoreError::InvalidParams(format!(
                "eps must lie in (0, 0.5], got {eps}"
            )));
        }
        let inv = 1.0 / eps;
        let rounded = inv.round();
        if (inv - rounded).abs() > 1e-9 * rounded.max(1.0) {
            return Err(CoreError::InvalidParams(format!(
                "1/eps = {inv} is not an integer"
            )));
        }
        LatticeParams::new(rounded as usize, j)
    }

    pub fn eps(&self) -> f64 {
        1.0 / self.inv_eps as f64
    }

    pub fn inv_eps(&self) -> usize {
        self.inv_eps
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    /// Number of lattice sites, `1/eps + 1`.
    pub fn sites(&self) -> usize {
        self.inv_eps + 1
    }
}

/// Occupation numbers with an indexed structure for suffix sums, order
/// statistics and the rightmost occupied site.
#[derive(Debug, Clone)]
pub struct ParticleConfig {
    counts: Vec<u64>,
    tree: Fenwick,
    total: u64,
}

impl ParticleConfig {
    pub fn empty(sites: usize) -> Self {
        ParticleConfig {
            counts: vec![0; sites],
            tree: Fenwick::new(sites),
            total: 0,
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        let tree = Fenwick::from_counts(&counts);
        let total = counts.iter().sum();
        ParticleConfig { counts, tree, total }
    }

    pub fn sites(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count_at(&self, site: usize) -> u64 {
        self.counts[site]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn increment(&mut self, site: usize) {
        self.counts[site] += 1;
        self.tree.add(site, 1);
        self.total += 1;
    }

    pub fn decrement(&mut self, site: usize) -> Result<()> {
        if self.counts[site] == 0 {
            return Err(CoreError::Domain(format!("site {site} is empty")));
        }
        self.counts[site] -= 1;
        self.tree.sub(site, 1);
        self.total -= 1;
        Ok(())
    }

    /// Largest occupied site; `None` iff the configuration is empty.
    pub fn rightmost_occupied(&self) -> Option<usize> {
        if self.total == 0 {
            None
        } else {
            Some(self.tree.select(self.total - 1))
        }
    }

    /// Number of particles at sites `>= x`.
    pub fn suffix_count(&self, x: usize) -> Result<u64> {
        if x >= self.counts.len() {
            return Err(CoreError::SiteOutOfRange {
                site: x,
                max: self.counts.len() - 1,
            });
        }
        Ok(self.tree.suffix(x))
    }

    /// Number of particles at sites `<= x`.
    pub fn prefix_count(&self, x: usize) -> u64 {
        self.tree.prefix(x)
    }

    /// Site of the k-th particle in left-to-right order (0-based).
    pub fn select_particle(&self, k: u64) -> usize {
        self.tree.select(k)
    }

    /// Mean occupation over the window `{x, ..., x + ell - 1}`.
    pub fn empirical_average(&self, x: usize, ell: usize) -> Result<f64> {
        if ell == 0 {
            return Err(CoreError::InvalidParams("window length must be >= 1".into()));
        }
        if x + ell > self.counts.len() {
            return Err(CoreError::WindowOutOfRange {
                start: x,
                len: ell,
                max: self.counts.len() - 1,
            });
        }
        let sum = if x == 0 {
            self.tree.prefix(x + ell - 1)
        } else {
            self.tree.prefix(x + ell - 1) - self.tree.prefix(x - 1)
        };
        Ok(sum as f64 / ell as f64)
    }
}

/// Rescaled total mass `eps * |xi|`.
pub fn mass_density(cfg: &ParticleConfig, params: &LatticeParams) -> f64 {
    params.eps() * cfg.total() as f64
}

// Ceiling with a small guard so quadrature noise on exact integers does not
// bump the count up by one.
fn ceil_guarded(z: f64) -> u64 {
    let c = (z - 1e-9).ceil();
    if c <= 0.0 {
        0
    } else {
        c as u64
    }
}

/// Particle approximation of a profile: cumulative counts up to site `x`
/// equal the rounded-up partial masses `⌈(1/eps) ∫_0^{eps(x+1)} ρ⌉`, and the
/// last site stays empty.
pub fn build_initial_config(params: &LatticeParams, spec: &ProfileSpec) -> Result<ParticleConfig> {
    spec.validate()?;
    let n = params.inv_eps();
    let eps = params.eps();
    let mut counts = vec![0u64; params.sites()];
    let mut integral = 0.0;
    let mut prev_cum = 0u64;
    for x in 0..n {
        let a = eps * x as f64;
        let b = eps * (x + 1) as f64;
        integral += adaptive_simpson(|r| spec.density(r), a, b, 1e-12);
        let cum = ceil_guarded(integral / eps);
        counts[x] = cum - prev_cum;
        prev_cum = cum;
    }
    let cfg = ParticleConfig::from_counts(counts);
    if cfg.total() > 100_000_000 {
        return Err(CoreError::InvalidParams(format!(
            "configuration of {} particles exceeds the supported cap",
            cfg.total()
        )));
    }
    Ok(cfg)
}

/// Same construction for a target particle count, using the invariant linear
/// profile with mass `eps * n`.
pub fn build_from_count(params: &LatticeParams, n_particles: u64) -> Result<ParticleConfig> {
    let spec = ProfileSpec::Linear {
        mass: params.eps() * n_particles as f64,
        j: params.j(),
    };
    let cfg = build_initial_config(params, &spec)?;
    debug_assert_eq!(cfg.total(), n_particles);
    Ok(cfg)
}

/// How close a configuration is to a profile, in the sense used for
/// admissible initial data: block averages over windows of length
/// `⌊eps^-b⌋` must match to `eps^a`, and (when the profile has an edge) the
/// rightmost occupied site must sit within `eps^a` of it.
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub window: usize,
    pub bound: f64,
    pub max_block_deviation: f64,
    pub edge_deviation: Option<f64>,
    pub ok: bool,
}

pub const DEFAULT_ADMISSIBILITY_A: f64 = 0.25;
pub const DEFAULT_ADMISSIBILITY_B: f64 = 0.75;

pub fn check_admissibility(
    cfg: &ParticleConfig,
    params: &LatticeParams,
    spec: &ProfileSpec,
    a: f64,
    b: f64,
) -> Result<AdmissibilityReport> {
    if !(0.0 < a && a < 1.0 && 0.0 < b && b < 1.0) {
        return Err(CoreError::InvalidParams(
            "admissibility exponents must lie in (0, 1)".into(),
        ));
    }
    let eps = params.eps();
    let ell = eps.powf(-b).floor() as usize;
    let ell = ell.max(1);
    let bound = eps.powf(a);
    let mut max_dev: f64 = 0.0;
    for x in 0..=(params.inv_eps() + 1 - ell) {
        let emp = cfg.empirical_average(x, ell)?;
        let lo = eps * x as f64;
        let hi = eps * (x + ell) as f64;
        let target = adaptive_simpson(|r| spec.density(r), lo, hi, 1e-12) / (eps * ell as f64);
        max_dev = max_dev.max((emp - target).abs());
    }
    let edge_deviation = spec.edge().map(|edge| {
        let r_xi = cfg.rightmost_occupied().map_or(0.0, |x| eps * x as f64);
        (r_xi - edge).abs()
    });
    let ok = max_dev <= bound && edge_deviation.map_or(true, |d| d <= bound);
    Ok(AdmissibilityReport {
        window: ell,
        bound,
        max_block_deviation: max_dev,
        edge_deviation,
        ok,
    })
}
