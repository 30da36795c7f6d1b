//! Binary indexed tree over per-site particle counts.
//!
//! Every event in the simulator needs one of: a suffix count, the rightmost
//! occupied site, or the site of the k-th particle. All three are answered in
//! O(log n) here; naive scans would make long runs quadratic.

#[derive(Debug, Clone)]
pub struct Fenwick {
    tree: Vec<u64>,
    n: usize,
}

impl Fenwick {
    pub fn new(n: usize) -> Self {
        Fenwick {
            tree: vec![0; n + 1],
            n,
        }
    }

    pub fn from_counts(counts: &[u64]) -> Self {
        let mut f = Fenwick::new(counts.len());
        for (i, &c) in counts.iter().enumerate() {
            if c > 0 {
                f.add(i, c);
            }
        }
        f
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn add(&mut self, i: usize, v: u64) {
        debug_assert!(i < self.n);
        let mut k = i + 1;
        while k <= self.n {
            self.tree[k] += v;
            k += k & k.wrapping_neg();
        }
    }

    pub fn sub(&mut self, i: usize, v: u64) {
        debug_assert!(i < self.n);
        let mut k = i + 1;
        while k <= self.n {
            debug_assert!(self.tree[k] >= v);
            self.tree[k] -= v;
            k += k & k.wrapping_neg();
        }
    }

    /// Sum of counts over sites `0..=i`.
    pub fn prefix(&self, i: usize) -> u64 {
        debug_assert!(i < self.n);
        let mut k = i + 1;
        let mut s = 0;
        while k > 0 {
            s += self.tree[k];
            k &= k - 1;
        }
        s
    }

    pub fn total(&self) -> u64 {
        if self.n == 0 {
            0
        } else {
            self.prefix(self.n - 1)
        }
    }

    /// Sum of counts over sites `i..n`.
    pub fn suffix(&self, i: usize) -> u64 {
        debug_assert!(i < self.n);
        if i == 0 {
            self.total()
        } else {
            self.total() - self.prefix(i - 1)
        }
    }

    /// Site of the k-th particle (0-based): the smallest `i` with
    /// `prefix(i) > k`. Requires `k < total()`.
    pub fn select(&self, k: u64) -> usize {
        debug_assert!(k < self.total());
        let mut pos = 0usize; // 1-based node index accumulated so far
        let mut rem = k;
        let mut step = self.n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= self.n && self.tree[next] <= rem {
                rem -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        pos // prefix(pos-1) <= k < prefix(pos) in 1-based terms => site = pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn prefix_and_suffix_match_naive_under_random_updates() {
        let mut rng = crate::rng::replica_rng(11, 0);
        let n = 67;
        let mut naive = vec![0u64; n];
        let mut f = Fenwick::new(n);
        for _ in 0..2000 {
            let i = rng.gen_range(0..n);
            if naive[i] > 0 && rng.gen_bool(0.4) {
                naive[i] -= 1;
                f.sub(i, 1);
            } else {
                naive[i] += 1;
                f.add(i, 1);
            }
            let q = rng.gen_range(0..n);
            let want_prefix: u64 = naive[..=q].iter().sum();
            let want_suffix: u64 = naive[q..].iter().sum();
            assert_eq!(f.prefix(q), want_prefix);
            assert_eq!(f.suffix(q), want_suffix);
        }
    }

    #[test]
    fn select_finds_every_particle() {
        let counts = vec![0, 3, 0, 0, 2, 1, 0, 4];
        let f = Fenwick::from_counts(&counts);
        let mut expect = Vec::new();
        for (site, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                expect.push(site);
            }
        }
        let got: Vec<usize> = (0..f.total()).map(|k| f.select(k)).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn select_rightmost_is_last_occupied() {
        let counts = vec![5, 0, 0, 2, 0, 0];
        let f = Fenwick::from_counts(&counts);
        assert_eq!(f.select(f.total() - 1), 3);
    }
}
