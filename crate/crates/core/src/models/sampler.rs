//! Sequential Pitman–Yor (Chinese restaurant) sampler.
//!
//! Each step consumes exactly one uniform `u`: the step opens a new symbol
//! when `u·(θ+i) < θ + kα`, otherwise the remainder selects an existing
//! symbol with weight `count − α` through a Fenwick tree. Feeding the same
//! seed under different parameters therefore reuses the same random numbers.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PypParams;
use crate::hashing::splitmix64;

/// Distinct-symbol count `K_m` and frequency-of-frequencies `M_{r,m}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionStats {
    pub m: u64,
    pub k_m: u64,
    pub m_r: BTreeMap<u64, u64>,
}

impl PartitionStats {
    pub fn from_counts(counts: &[u64]) -> Self {
        let mut m_r = BTreeMap::new();
        for &c in counts.iter().filter(|&&c| c > 0) {
            *m_r.entry(c).or_insert(0) += 1;
        }
        PartitionStats {
            m: counts.iter().sum(),
            k_m: m_r.values().sum(),
            m_r,
        }
    }

    pub fn singletons(&self) -> u64 {
        self.m_r.get(&1).copied().unwrap_or(0)
    }
}

struct Fenwick {
    tree: Vec<f64>,
}

impl Fenwick {
    fn with_capacity(n: usize) -> Self {
        Fenwick { tree: Vec::with_capacity(n + 1) }
    }

    fn len(&self) -> usize {
        self.tree.len()
    }

    /// Appends a new last element with weight `w`.
    fn push(&mut self, w: f64) {
        let i = self.tree.len() + 1;
        let low = i & i.wrapping_neg();
        let mut v = w;
        let mut j = i - 1;
        let stop = i - low;
        while j > stop {
            v += self.tree[j - 1];
            j -= j & j.wrapping_neg();
        }
        self.tree.push(v);
    }

    fn add(&mut self, idx: usize, w: f64) {
        let mut i = idx + 1;
        while i <= self.tree.len() {
            self.tree[i - 1] += w;
            i += i & i.wrapping_neg();
        }
    }

    /// Index of the element whose cumulative range contains `target`.
    fn find(&self, mut target: f64) -> usize {
        let n = self.tree.len();
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next - 1] <= target {
                target -= self.tree[next - 1];
                pos = next;
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }
}

pub struct PypSampler {
    params: PypParams,
    rng: ChaCha8Rng,
    counts: Vec<u64>,
    weights: Fenwick,
    drawn: u64,
}

impl PypSampler {
    pub fn new(params: PypParams, seed: u64) -> Self {
        PypSampler {
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
            counts: Vec::new(),
            weights: Fenwick::with_capacity(1024),
            drawn: 0,
        }
    }

    /// Draws the next observation and returns its symbol index (0-based, in order of first appearance).
    pub fn step(&mut self) -> usize {
        let PypParams { alpha, theta } = self.params;
        let i = self.drawn as f64;
        let k = self.counts.len();
        let u: f64 = self.rng.random();
        let scaled = u * (theta + i);
        let new_mass = theta + k as f64 * alpha;
        self.drawn += 1;
        if k == 0 || scaled < new_mass {
            self.counts.push(1);
            self.weights.push(1.0 - alpha);
            return k;
        }
        let idx = self.weights.find(scaled - new_mass);
        self.counts[idx] += 1;
        self.weights.add(idx, 1.0);
        idx
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn distinct(&self) -> usize {
        self.weights.len()
    }

    pub fn into_counts(self) -> Vec<u64> {
        self.counts
    }
}

/// Token id of the `k`-th distinct symbol of the stream seeded with `seed`.
pub fn symbol_token(seed: u64, k: usize) -> u64 {
    splitmix64(splitmix64(seed ^ 0x5eed_5eed_5eed_5eed).wrapping_add(k as u64))
}

/// Per-symbol frequencies of a length-`m` PYP sample.
pub fn sample_counts(params: PypParams, m: u64, seed: u64) -> Vec<u64> {
    let mut s = PypSampler::new(params, seed);
    for _ in 0..m {
        s.step();
    }
    s.into_counts()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledStream {
    pub tokens: Vec<u64>,
    pub stats: PartitionStats,
}

pub fn sample_stream(params: PypParams, m: u64, seed: u64) -> SampledStream {
    let mut s = PypSampler::new(params, seed);
    let tokens = (0..m).map(|_| symbol_token(seed, s.step())).collect();
    let stats = PartitionStats::from_counts(s.counts());
    SampledStream { tokens, stats }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fenwick_find_matches_linear_scan() {
        let mut f = Fenwick::with_capacity(8);
        let w = [0.5, 2.0, 0.25, 1.0, 3.0, 0.75, 0.5];
        for &x in &w {
            f.push(x);
        }
        f.add(2, 1.0);
        let w = [0.5, 2.0, 1.25, 1.0, 3.0, 0.75, 0.5];
        let total: f64 = w.iter().sum();
        for step in 0..200 {
            let t = total * step as f64 / 200.0;
            let mut acc = 0.0;
            let want = w.iter().position(|x| {
                acc += x;
                t < acc
            });
            assert_eq!(f.find(t), want.unwrap(), "t={t}");
        }
    }

    #[test]
    fn first_draw_is_new() {
        let p = PypParams::new(0.3, 2.0).unwrap();
        for seed in 0..20 {
            let s = sample_stream(p, 1, seed);
            assert_eq!(s.stats.k_m, 1);
            assert_eq!(s.stats.singletons(), 1);
        }
    }

    #[test]
    fn stats_are_consistent_and_deterministic() {
        let p = PypParams::new(0.6, 5.0).unwrap();
        let a = sample_stream(p, 5000, 3);
        assert_eq!(a, sample_stream(p, 5000, 3));
        let s = &a.stats;
        assert_eq!(s.m_r.values().sum::<u64>(), s.k_m);
        assert_eq!(s.m_r.iter().map(|(r, c)| r * c).sum::<u64>(), 5000);
        let distinct: std::collections::HashSet<_> = a.tokens.iter().collect();
        assert_eq!(distinct.len() as u64, s.k_m);
    }
}
