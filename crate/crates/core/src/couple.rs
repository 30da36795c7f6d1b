//! Coupling of two labeled walker systems on one clock.
//!
//! State: positions `x` for labels in `I`, positions `y` for labels in
//! `J ⊇ I`. Labels with `x_i = y_i` are matched and move as one (double
//! jumps); unmatched coordinates move independently at the single-walker
//! rates. Creations append a fresh label at the origin in both systems. A
//! death erases the rightmost/largest-label particle on each side and then
//! repairs the label sets so `I ⊆ J` survives; the repair never increases
//! the distance `|x_l - y_l|` of a surviving label. Both marginals evolve
//! exactly as the single-system process (boundary-suppressed moves are
//! kept as held events, which does not change the law).

use crate::error::{CoreError, Result};
use crate::lattice::LatticeParams;
use crate::rng::exp_time;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LabelPos {
    x: Option<usize>,
    y: Option<usize>,
}

impl LabelPos {
    fn matched(&self) -> bool {
        self.x.is_some() && self.x == self.y
    }

    fn dead(&self) -> bool {
        self.x.is_none() && self.y.is_none()
    }
}

/// What one coupled event did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairEvent {
    /// Unmatched x-coordinate moved (or held at a boundary).
    SingleX { label: usize, moved: bool },
    /// Coordinate in `J` without a matched partner moved (or held).
    SingleY { label: usize, moved: bool },
    /// Matched pair moved together (or held).
    Double { label: usize, moved: bool },
    /// Fresh label appended at the origin in both systems.
    Creation { label: usize },
    /// Rightmost/largest-label particles erased on both sides (either may
    /// be absent when that marginal is empty).
    Death {
        erased_x: Option<usize>,
        erased_y: Option<usize>,
    },
}

/// Coupled labeled state.
#[derive(Debug, Clone)]
pub struct LabeledPair {
    pub params: LatticeParams,
    labels: Vec<LabelPos>,
    pub clock: f64,
    rng: ChaCha8Rng,
    n_i: usize,
    n_j: usize,
    n_matched: usize,
}

impl LabeledPair {
    /// Couple two initial position lists; label `l ∈ 1..=xs.len()` starts at
    /// `(xs[l-1], ys[l-1])`, the remaining labels carry only a y-coordinate,
    /// so `|J \ I| = ys.len() - xs.len()`.
    pub fn new(
        params: LatticeParams,
        xs: &[usize],
        ys: &[usize],
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        if xs.len() > ys.len() {
            return Err(CoreError::InvalidParams(
                "the x-system cannot have more labels than the y-system".into(),
            ));
        }
        let max_site = params.inv_eps();
        if let Some(&bad) = xs.iter().chain(ys).find(|&&p| p > max_site) {
            return Err(CoreError::SiteOutOfRange {
                site: bad,
                max: max_site,
            });
        }
        let labels: Vec<LabelPos> = ys
            .iter()
            .enumerate()
            .map(|(i, &y)| LabelPos {
                x: xs.get(i).copied(),
                y: Some(y),
            })
            .collect();
        let n_matched = labels.iter().filter(|l| l.matched()).count();
        Ok(LabeledPair {
            params,
            labels,
            clock: 0.0,
            rng,
            n_i: xs.len(),
            n_j: ys.len(),
            n_matched,
        })
    }

    /// Largest label ever used.
    pub fn max_label(&self) -> usize {
        self.labels.len()
    }

    /// `|I \ I=|`: labels whose coordinates disagree.
    pub fn discrepancy_count(&self) -> usize {
        self.n_i - self.n_matched
    }

    /// The labels currently counted by [`discrepancy_count`].
    pub fn discrepancy_set(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.x.is_some() && !l.matched())
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// `|J \ I|`.
    pub fn extra_labels(&self) -> usize {
        self.n_j - self.n_i
    }

    pub fn x_count(&self) -> usize {
        self.n_i
    }

    pub fn y_count(&self) -> usize {
        self.n_j
    }

    /// Positions of label `l` (1-based).
    pub fn positions(&self, label: usize) -> (Option<usize>, Option<usize>) {
        let l = &self.labels[label - 1];
        (l.x, l.y)
    }

    /// Occupation numbers of the two marginals.
    pub fn configurations(&self) -> (Vec<u64>, Vec<u64>) {
        let sites = self.params.sites();
        let mut xi = vec![0u64; sites];
        let mut eta = vec![0u64; sites];
        for l in &self.labels {
            if let Some(x) = l.x {
                xi[x] += 1;
            }
            if let Some(y) = l.y {
                eta[y] += 1;
            }
        }
        (xi, eta)
    }

    /// Sitewise L1 distance between the marginals. Matched labels cancel
    /// sitewise, each discrepant label contributes at most 2 (one site per
    /// coordinate) and each extra label at most 1, so the distance is
    /// bounded by `2·discrepancy_count + extra_labels` pathwise.
    pub fn l1_distance(&self) -> u64 {
        let (xi, eta) = self.configurations();
        xi.iter().zip(&eta).map(|(a, b)| a.abs_diff(*b)).sum()
    }

    /// The pathwise L1 bound `2·|I \ I=| + |J \ I|`.
    pub fn l1_bound(&self) -> u64 {
        2 * self.discrepancy_count() as u64 + self.extra_labels() as u64
    }

    fn total_rate(&self) -> f64 {
        let slots = self.walk_slots();
        slots as f64 + 2.0 * self.params.eps() * self.params.j()
    }

    // One unit of rate per unmatched coordinate and per matched pair.
    fn walk_slots(&self) -> usize {
        (self.n_i - self.n_matched) + (self.n_j - self.n_matched) + self.n_matched
    }

    /// Advance the clock past one event, apply it, and return it.
    pub fn step(&mut self) -> PairEvent {
        let total = self.total_rate();
        self.clock += exp_time(&mut self.rng, total);
        self.fire()
    }

    /// Advance to `t_end`, leaving the state holding at that instant.
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

    fn fire(&mut self) -> PairEvent {
        let reservoir = self.params.eps() * self.params.j();
        let total = self.total_rate();
        let u: f64 = self.rng.gen::<f64>() * total;
        if u < reservoir {
            self.apply_creation()
        } else if u < 2.0 * reservoir {
            self.apply_death()
        } else {
            let slots = self.walk_slots();
            debug_assert!(slots > 0, "walk channel drawn with no walkers");
            let k = self.rng.gen_range(0..slots);
            let go_right = self.rng.gen::<bool>();
            self.apply_walk(k, go_right)
        }
    }

    fn apply_walk(&mut self, mut k: usize, go_right: bool) -> PairEvent {
        for idx in 0..self.labels.len() {
            let l = self.labels[idx];
            if l.dead() {
                continue;
            }
            if l.matched() {
                if k == 0 {
                    return self.apply_double(idx, go_right);
                }
                k -= 1;
            } else {
                if l.x.is_some() {
                    if k == 0 {
                        return self.apply_single_x(idx, go_right);
                    }
                    k -= 1;
                }
                if l.y.is_some() {
                    if k == 0 {
                        return self.apply_single_y(idx, go_right);
                    }
                    k -= 1;
                }
            }
        }
        unreachable!("slot index exceeds live walkers")
    }

    fn shifted(&self, pos: usize, go_right: bool) -> Option<usize> {
        let last = self.params.inv_eps();
        if go_right {
            (pos < last).then(|| pos + 1)
        } else {
            (pos > 0).then(|| pos - 1)
        }
    }

    fn apply_single_x(&mut self, idx: usize, go_right: bool) -> PairEvent {
        let pos = self.labels[idx].x.expect("x-coordinate present");
        let moved = if let Some(np) = self.shifted(pos, go_right) {
            self.labels[idx].x = Some(np);
            if self.labels[idx].matched() {
                self.n_matched += 1;
            }
            true
        } else {
            false
        };
        PairEvent::SingleX {
            label: idx + 1,
            moved,
        }
    }

    fn apply_single_y(&mut self, idx: usize, go_right: bool) -> PairEvent {
        let pos = self.labels[idx].y.expect("y-coordinate present");
        let moved = if let Some(np) = self.shifted(pos, go_right) {
            self.labels[idx].y = Some(np);
            if self.labels[idx].matched() {
                self.n_matched += 1;
            }
            true
        } else {
            false
        };
        PairEvent::SingleY {
            label: idx + 1,
            moved,
        }
    }

    fn apply_double(&mut self, idx: usize, go_right: bool) -> PairEvent {
        let pos = self.labels[idx].x.expect("matched label");
        let moved = if let Some(np) = self.shifted(pos, go_right) {
            self.labels[idx].x = Some(np);
            self.labels[idx].y = Some(np);
            true
        } else {
            false
        };
        PairEvent::Double {
            label: idx + 1,
            moved,
        }
    }

    fn apply_creation(&mut self) -> PairEvent {
        self.labels.push(LabelPos {
            x: Some(0),
            y: Some(0),
        });
        self.n_i += 1;
        self.n_j += 1;
        self.n_matched += 1;
        PairEvent::Creation {
            label: self.labels.len(),
        }
    }

    // Index of the largest label among particles at the rightmost occupied
    // site of one marginal.
    fn erase_target(&self, pick_x: bool) -> Option<usize> {
        let mut best: Option<(usize, usize)> = None; // (site, idx)
        for (idx, l) in self.labels.iter().enumerate() {
            let pos = if pick_x { l.x } else { l.y };
            if let Some(p) = pos {
                let better = match best {
                    None => true,
                    Some((bs, bi)) => p > bs || (p == bs && idx > bi),
                };
                if better {
                    best = Some((p, idx));
                }
            }
        }
        best.map(|(_, idx)| idx)
    }

    fn apply_death(&mut self) -> PairEvent {
        let ix = self.erase_target(true);
        let jy = self.erase_target(false);
        if let Some(i) = ix {
            if self.labels[i].matched() {
                self.n_matched -= 1;
            }
            self.labels[i].x = None;
            self.n_i -= 1;
        }
        if let Some(j) = jy {
            if self.labels[j].matched() {
                self.n_matched -= 1;
            }
            self.labels[j].y = None;
            self.n_j -= 1;
        }
        // Repair: when distinct labels were erased and the y-erased label
        // is still in I, one coordinate is handed over so that the erased
        // pair of labels collapses to one and I ⊆ J again. The comparison
        // picks the hand-over that shrinks the surviving pair's distance.
        if let (Some(i), Some(j)) = (ix, jy) {
            if i != j && self.labels[j].x.is_some() {
                let xj = self.labels[j].x.expect("checked above");
                let yi = self.labels[i].y.expect("only y_j was erased");
                if xj <= yi {
                    // label i disappears; its y-position survives as y_j
                    self.labels[j].y = Some(yi);
                    self.labels[i].y = None;
                    if self.labels[j].matched() {
                        self.n_matched += 1;
                    }
                } else {
                    // label j disappears; its x-position survives as x_i
                    self.labels[i].x = Some(xj);
                    self.labels[j].x = None;
                    if self.labels[i].matched() {
                        self.n_matched += 1;
                    }
                }
            }
        }
        debug_assert!(self.invariants_hold());
        PairEvent::Death {
            erased_x: ix.map(|i| i + 1),
            erased_y: jy.map(|j| j + 1),
        }
    }

    fn invariants_hold(&self) -> bool {
        let n_i = self.labels.iter().filter(|l| l.x.is_some()).count();
        let n_j = self.labels.iter().filter(|l| l.y.is_some()).count();
        let matched = self.labels.iter().filter(|l| l.matched()).count();
        let subset = self.labels.iter().all(|l| l.x.is_none() || l.y.is_some());
        n_i == self.n_i && n_j == self.n_j && matched == self.n_matched && subset
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;

    fn params(inv_eps: usize) -> LatticeParams {
        LatticeParams::new(inv_eps, 1.0).unwrap()
    }

    fn pair(inv_eps: usize, xs: &[usize], ys: &[usize], seed: u64) -> LabeledPair {
        LabeledPair::new(params(inv_eps), xs, ys, replica_rng(seed, 0)).unwrap()
    }

    #[test]
    fn matched_initial_state_stays_identical() {
        let xs = [2usize, 5, 5, 9];
        let mut p = pair(10, &xs, &xs, 1);
        assert_eq!(p.discrepancy_count(), 0);
        for _ in 0..20_000 {
            p.step();
            assert_eq!(p.discrepancy_count(), 0);
            assert_eq!(p.l1_distance(), 0);
        }
        let (xi, eta) = p.configurations();
        assert_eq!(xi, eta);
    }

    #[test]
    fn discrepancies_never_increase() {
        let xs: Vec<usize> = (0..12).map(|i| i % 7).collect();
        let ys: Vec<usize> = (0..12).map(|i| (3 * i + 1) % 10).collect();
        let mut p = pair(10, &xs, &ys, 2);
        let mut last = p.discrepancy_count();
        let mut set_last = p.discrepancy_set();
        for _ in 0..50_000 {
            p.step();
            let now = p.discrepancy_count();
            assert!(now <= last, "discrepancy grew: {last} -> {now}");
            let set_now = p.discrepancy_set();
            assert!(
                set_now.iter().all(|l| set_last.contains(l)),
                "discrepancy set gained a label"
            );
            last = now;
            set_last = set_now;
        }
    }

    #[test]
    fn l1_distance_bounded_by_discrepancies_plus_extras() {
        let xs: Vec<usize> = (0..10).collect();
        let ys: Vec<usize> = (0..13).map(|i| (2 * i) % 14).collect();
        let mut p = pair(14, &xs, &ys, 3);
        for _ in 0..30_000 {
            p.step();
            let l1 = p.l1_distance();
            assert!(l1 <= p.l1_bound(), "L1 {l1} > {}", p.l1_bound());
        }
        // the factor 2 per discrepant label is sharp: a single mismatched
        // pair occupies two distinct sites
        let lone = pair(14, &[3], &[9], 99);
        assert_eq!(lone.discrepancy_count(), 1);
        assert_eq!(lone.l1_distance(), 2);
    }

    #[test]
    fn death_shrinks_surviving_pair_distances() {
        let xs: Vec<usize> = (0..15).map(|i| (i * 3) % 16).collect();
        let ys: Vec<usize> = (0..15).map(|i| (i * 5 + 2) % 16).collect();
        let mut p = pair(16, &xs, &ys, 4);
        let mut deaths_seen = 0;
        while deaths_seen < 300 {
            let before: Vec<(usize, Option<usize>, Option<usize>)> = (1..=p.max_label())
                .map(|l| {
                    let (x, y) = p.positions(l);
                    (l, x, y)
                })
                .collect();
            if let PairEvent::Death { .. } = p.step() {
                deaths_seen += 1;
                for (l, bx, by) in before {
                    let (ax, ay) = p.positions(l);
                    if let (Some(bx), Some(by), Some(ax), Some(ay)) = (bx, by, ax, ay) {
                        assert!(
                            ax.abs_diff(ay) <= bx.abs_diff(by),
                            "label {l}: |x-y| grew {} -> {}",
                            bx.abs_diff(by),
                            ax.abs_diff(ay)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn creation_appends_matched_label_at_origin() {
        let mut p = pair(8, &[3], &[5, 7], 5);
        assert_eq!(p.extra_labels(), 1);
        let label = loop {
            if let PairEvent::Creation { label } = p.step() {
                break label;
            }
        };
        assert_eq!(p.positions(label), (Some(0), Some(0)));
        assert_eq!(p.extra_labels(), 1); // m conserved by creations
    }

    #[test]
    fn subset_invariant_and_extras_conserved() {
        let xs: Vec<usize> = (0..9).collect();
        let ys: Vec<usize> = (0..11).map(|i| 10 - i % 11).collect();
        let m = ys.len() - xs.len();
        let mut p = pair(12, &xs, &ys, 6);
        for _ in 0..40_000 {
            p.step();
            assert!(p.extra_labels() <= m, "J \\ I grew past m");
            assert!(p.invariants_hold());
        }
    }

    #[test]
    fn empty_system_can_only_create_or_idle() {
        let mut p = pair(6, &[], &[], 8);
        for _ in 0..100 {
            let was_empty = p.y_count() == 0;
            match p.step() {
                PairEvent::Creation { .. } => {}
                PairEvent::Death { erased_x, erased_y } => {
                    if was_empty {
                        // the removal channel idles on empty marginals
                        assert_eq!((erased_x, erased_y), (None, None));
                    }
                }
                PairEvent::Double { .. }
                | PairEvent::SingleX { .. }
                | PairEvent::SingleY { .. } => {
                    assert!(!was_empty);
                }
            }
            assert!(p.invariants_hold());
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let xs = [1usize, 4, 7];
        let ys = [2usize, 4, 9];
        let mut a = pair(10, &xs, &ys, 7);
        let mut b = pair(10, &xs, &ys, 7);
        for _ in 0..2_000 {
            assert_eq!(a.step(), b.step());
        }
        assert_eq!(a.clock, b.clock);
        assert_eq!(a.configurations(), b.configurations());
    }
}
