//! Event-driven simulation of walkers with current reservoirs.
//!
//! Each particle at an interior site hops left or right at rate ½; particles
//! at the endpoints only hop inward (reflection). A particle is created at
//! the origin at rate `eps·j`, and one is removed from the rightmost
//! occupied site at the same rate whenever the configuration is non-empty.
//! Waiting times are exponential in the total rate and are redrawn after
//! every event, which is exact for a jump process.

use crate::barriers::MeasureU;
use crate::lattice::{LatticeParams, ParticleConfig};
use crate::rng::exp_time;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One applied event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Jump { from: usize, to: usize },
    Birth,
    Death { site: usize },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::Jump { .. } => "jump",
            Event::Birth => "birth",
            Event::Death { .. } => "death",
        }
    }

    pub fn site(&self) -> usize {
        match self {
            Event::Jump { from, .. } => *from,
            Event::Birth => 0,
            Event::Death { site } => *site,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EventCounters {
    pub births: u64,
    pub deaths: u64,
    pub jumps: u64,
}

/// Simulator state: configuration, continuous clock, seeded stream.
#[derive(Debug, Clone)]
pub struct SimState {
    pub params: LatticeParams,
    pub cfg: ParticleConfig,
    pub clock: f64,
    pub counters: EventCounters,
    rng: ChaCha8Rng,
}

impl SimState {
    pub fn new(params: LatticeParams, cfg: ParticleConfig, rng: ChaCha8Rng) -> Self {
        debug_assert_eq!(cfg.sites(), params.sites());
        SimState {
            params,
            cfg,
            clock: 0.0,
            counters: EventCounters::default(),
            rng,
        }
    }

    /// Total event rate: hops contribute ½ per admissible direction (so
    /// `total − (counts[0] + counts[last])/2` in all), plus `eps·j` for
    /// births and the same for deaths when the configuration is non-empty.
    pub fn total_rate(&self) -> f64 {
        let reservoir = self.params.eps() * self.params.j();
        let death = if self.cfg.total() > 0 { reservoir } else { 0.0 };
        self.hop_rate() + reservoir + death
    }

    fn hop_rate(&self) -> f64 {
        0.5 * self.half_units() as f64
    }

    // Number of (particle, admissible direction) pairs, each at rate ½.
    fn half_units(&self) -> u64 {
        let last = self.params.inv_eps();
        2 * self.cfg.total() - self.cfg.count_at(0) - self.cfg.count_at(last)
    }

    /// Advance the clock past one event, apply it, and return it.
    pub fn step(&mut self) -> Event {
        let rate = self.total_rate();
        self.clock += exp_time(&mut self.rng, rate);
        self.fire()
    }

    // Draw which event ends the current waiting interval and apply it. The
    // event type may be drawn when the interval ends because the state (and
    // hence all rates) is constant throughout it.
    fn fire(&mut self) -> Event {
        let reservoir = self.params.eps() * self.params.j();
        let death_rate = if self.cfg.total() > 0 { reservoir } else { 0.0 };
        let total = self.hop_rate() + reservoir + death_rate;
        let u: f64 = self.rng.gen::<f64>() * total;
        if u < reservoir {
            self.apply_birth()
        } else if u < reservoir + death_rate {
            self.apply_death().expect("death channel open implies non-empty")
        } else {
            let h = self.half_units();
            debug_assert!(h > 0);
            let k = self.rng.gen_range(0..h);
            self.apply_hop(k)
        }
    }

    fn apply_birth(&mut self) -> Event {
        self.cfg.increment(0);
        self.counters.births += 1;
        Event::Birth
    }

    /// Remove one particle from the rightmost occupied site; `None` on an
    /// empty configuration (the removal channel is closed there).
    pub fn apply_death(&mut self) -> Option<Event> {
        let site = self.cfg.rightmost_occupied()?;
        self.cfg.decrement(site).expect("rightmost site is occupied");
        self.counters.deaths += 1;
        Some(Event::Death { site })
    }

    // Map a half-unit index to (site, direction) and move that particle.
    // Units are ordered site by site; interior particles own a left and a
    // right unit, endpoint particles a single inward one.
    fn apply_hop(&mut self, k: u64) -> Event {
        let last = self.params.inv_eps();
        let c0 = self.cfg.count_at(0);
        // Units up through site x (x < last) number 2·prefix(x) − c0, so
        // unit k lives at the site of particle (k + c0)/2.
        let particle = (k + c0) >> 1;
        let from = self.cfg.select_particle(particle);
        let to = if from == 0 {
            1
        } else if from == last {
            last - 1
        } else {
            let units_before = 2 * self.cfg.prefix_count(from - 1) - c0;
            let offset = k - units_before;
            if offset % 2 == 0 {
                from - 1
            } else {
                from + 1
            }
        };
        self.cfg.decrement(from).expect("selected site is occupied");
        self.cfg.increment(to);
        self.counters.jumps += 1;
        Event::Jump { from, to }
    }

    /// Run until the clock reaches `t_end`, leaving the configuration in
    /// the state that holds at that instant.
    pub fn run_until(&mut self, t_end: f64) {
        loop {
            let rate = self.total_rate();
            let wait = exp_time(&mut self.rng, rate);
            if self.clock + wait >= t_end {
                self.clock = t_end;
                return;
            }
            self.clock += wait;
            self.fire();
        }
    }

    /// Run forward recording the state holding at each sample time (sorted,
    /// possibly several inside one waiting interval). The clock finishes at
    /// the last sample time.
    pub fn run_sampling(&mut self, sample_times: &[f64]) -> Vec<Snapshot> {
        debug_assert!(sample_times.windows(2).all(|w| w[0] <= w[1]));
        let mut snaps = Vec::with_capacity(sample_times.len());
        let rate0 = self.total_rate();
        let mut next_event = self.clock + exp_time(&mut self.rng, rate0);
        for &t in sample_times {
            while next_event < t {
                self.clock = next_event;
                self.fire();
                let rate = self.total_rate();
                next_event = self.clock + exp_time(&mut self.rng, rate);
            }
            snaps.push(Snapshot::take(t, &self.cfg));
        }
        if let Some(&t_last) = sample_times.last() {
            self.clock = self.clock.max(t_last);
        }
        snaps
    }
}

/// A recorded configuration. Sparse storage kicks in below 10% occupancy.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub total: u64,
    cells: SnapshotCells,
}

#[derive(Debug, Clone, PartialEq)]
enum SnapshotCells {
    Dense(Vec<u64>),
    Sparse { sites: usize, pairs: Vec<(usize, u64)> },
}

impl Snapshot {
    pub fn take(t: f64, cfg: &ParticleConfig) -> Self {
        let occupied = cfg.counts().iter().filter(|&&c| c > 0).count();
        let cells = if occupied * 10 < cfg.sites() {
            SnapshotCells::Sparse {
                sites: cfg.sites(),
                pairs: cfg
                    .counts()
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(x, &c)| (x, c))
                    .collect(),
            }
        } else {
            SnapshotCells::Dense(cfg.counts().to_vec())
        };
        Snapshot {
            t,
            total: cfg.total(),
            cells,
        }
    }

    pub fn sites(&self) -> usize {
        match &self.cells {
            SnapshotCells::Dense(v) => v.len(),
            SnapshotCells::Sparse { sites, .. } => *sites,
        }
    }

    pub fn counts(&self) -> Vec<u64> {
        match &self.cells {
            SnapshotCells::Dense(v) => v.clone(),
            SnapshotCells::Sparse { sites, pairs } => {
                let mut v = vec![0; *sites];
                for &(x, c) in pairs {
                    v[x] = c;
                }
                v
            }
        }
    }

    /// Suffix counts at every site.
    pub fn suffix_counts(&self) -> Vec<u64> {
        let counts = self.counts();
        let mut suffix = vec![0u64; counts.len()];
        let mut acc = 0;
        for (i, &c) in counts.iter().enumerate().rev() {
            acc += c;
            suffix[i] = acc;
        }
        suffix
    }

    /// Sparse `(site, count)` pairs over occupied sites.
    pub fn occupied_pairs(&self) -> Vec<(usize, u64)> {
        match &self.cells {
            SnapshotCells::Sparse { pairs, .. } => pairs.clone(),
            SnapshotCells::Dense(v) => v
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(x, &c)| (x, c))
                .collect(),
        }
    }
}

/// Largest deviation between the rescaled suffix counts of a snapshot and
/// the suffix-mass functional of a macroscopic state, over all sites.
pub fn hydrodynamic_gap(snap: &Snapshot, target: &MeasureU, params: &LatticeParams) -> f64 {
    hydrodynamic_gap_fn(snap, |r| target.f_at(r), params)
}

/// Same, against an arbitrary suffix-mass function.
pub fn hydrodynamic_gap_fn(
    snap: &Snapshot,
    f_target: impl Fn(f64) -> f64,
    params: &LatticeParams,
) -> f64 {
    let eps = params.eps();
    snap.suffix_counts()
        .iter()
        .enumerate()
        .map(|(x, &s)| (eps * s as f64 - f_target(eps * x as f64)).abs())
        .fold(0.0f64, f64::max)
}

/// Run independent replicas in parallel, deterministically: replica `i`
/// always consumes the stream `(seed, i)` regardless of scheduling, and the
/// results come back in replica order.
pub fn run_replicas<T: Send>(
    replicas: usize,
    seed: u64,
    job: impl Fn(u64, ChaCha8Rng) -> T + Sync,
) -> Vec<T> {
    use rayon::prelude::*;
    (0..replicas as u64)
        .into_par_iter()
        .map(|i| job(i, crate::rng::replica_rng(seed, i)))
        .collect()
}
