//! Exhaustive ground truth for small streams.
//!
//! Every set partition of the `m + s` draws is visited with its
//! exchangeable partition probability (accumulated sequentially in log
//! space), each block receives an independent uniform bucket, and the
//! bucket assignments are marginalized exactly by convolution.

use super::PypParams;
use crate::error::{invalid, Result};

pub const ORACLE_MAX_M: usize = 10;
pub const ORACLE_MAX_J: usize = 4;

fn visit_partitions<F: FnMut(&[usize], &[usize], f64)>(m: usize, s: usize, params: PypParams, mut visit: F) {
    struct State {
        old: Vec<usize>,
        total: Vec<usize>,
        new_blocks: Vec<usize>,
    }
    fn rec<F: FnMut(&[usize], &[usize], f64)>(
        e: usize,
        n: usize,
        m: usize,
        p: PypParams,
        st: &mut State,
        logw: f64,
        visit: &mut F,
    ) {
        if e == n {
            visit(&st.old, &st.new_blocks, logw.exp());
            return;
        }
        let k = st.total.len();
        let denom = if e == 0 { 0.0 } else { (p.theta + e as f64).ln() };
        for b in 0..k {
            let w = logw + (st.total[b] as f64 - p.alpha).ln() - denom;
            st.total[b] += 1;
            if e < m {
                st.old[b] += 1;
            } else {
                st.new_blocks.push(b);
            }
            rec(e + 1, n, m, p, st, w, visit);
            st.total[b] -= 1;
            if e < m {
                st.old[b] -= 1;
            } else {
                st.new_blocks.pop();
            }
        }
        let w = if e == 0 { logw } else { logw + (p.theta + k as f64 * p.alpha).ln() - denom };
        st.total.push(1);
        st.old.push(usize::from(e < m));
        if e >= m {
            st.new_blocks.push(k);
        }
        rec(e + 1, n, m, p, st, w, visit);
        st.total.pop();
        st.old.pop();
        if e >= m {
            st.new_blocks.pop();
        }
    }
    let mut st = State { old: Vec::new(), total: Vec::new(), new_blocks: Vec::new() };
    rec(0, m + s, m, params, &mut st, 0.0, &mut visit);
}

/// Law of `Σ_b sizes[b]·Bernoulli(q)` over blocks not in `skip`.
fn collision_mass(sizes: &[usize], skip: &[usize], q: f64, m: usize) -> Vec<f64> {
    let mut dist = vec![0.0; m + 1];
    dist[0] = 1.0;
    for (b, &size) in sizes.iter().enumerate() {
        if size == 0 || skip.contains(&b) {
            continue;
        }
        for x in (0..=m).rev() {
            let hit = if x >= size { dist[x - size] } else { 0.0 };
            dist[x] = (1.0 - q) * dist[x] + q * hit;
        }
    }
    dist
}

/// Joint law of the extra mass landing in two distinct buckets.
fn collision_mass_pair(sizes: &[usize], skip: &[usize], q: f64, m: usize) -> Vec<f64> {
    let w = m + 1;
    let mut dist = vec![0.0; w * w];
    dist[0] = 1.0;
    for (b, &size) in sizes.iter().enumerate() {
        if size == 0 || skip.contains(&b) {
            continue;
        }
        for x1 in (0..=m).rev() {
            for x2 in (0..=m).rev() {
                let mut v = (1.0 - 2.0 * q) * dist[x1 * w + x2];
                if x1 >= size {
                    v += q * dist[(x1 - size) * w + x2];
                }
                if x2 >= size {
                    v += q * dist[x1 * w + x2 - size];
                }
                dist[x1 * w + x2] = v;
            }
        }
    }
    dist
}

fn check_limits(m: usize, j: usize) -> Result<()> {
    if m > ORACLE_MAX_M {
        return invalid(format!("enumeration oracle supports m ≤ {ORACLE_MAX_M}, got {m}"));
    }
    if j == 0 || j > ORACLE_MAX_J {
        return invalid(format!("enumeration oracle supports 1 ≤ J ≤ {ORACLE_MAX_J}, got {j}"));
    }
    Ok(())
}

/// Exact joint law of the frequencies of the next `s` draws among the first
/// `m` and the counters of the buckets they hash to (one perfect hash).
#[derive(Debug, Clone, PartialEq)]
pub struct OracleLaw {
    m: usize,
    s: usize,
    joint: Vec<f64>,
}

pub fn enumeration_oracle(m: usize, j: usize, params: PypParams, s: usize) -> Result<OracleLaw> {
    check_limits(m, j)?;
    if s != 1 && s != 2 {
        return invalid(format!("query arity must be 1 or 2, got {s}"));
    }
    let w = m + 1;
    let q = 1.0 / j as f64;
    let mut joint = vec![0.0; w.pow(2 * s as u32)];
    visit_partitions(m, s, params, |old, new_blocks, weight| {
        if s == 1 {
            let b = new_blocks[0];
            let f = old[b];
            let extra = collision_mass(old, &[b], q, m);
            for (x, p) in extra.iter().enumerate().take(w - f) {
                joint[f * w + f + x] += weight * p;
            }
            return;
        }
        let (b1, b2) = (new_blocks[0], new_blocks[1]);
        let (f1, f2) = (old[b1], old[b2]);
        let idx = |l1: usize, l2: usize, c1: usize, c2: usize| ((l1 * w + l2) * w + c1) * w + c2;
        if b1 == b2 {
            let extra = collision_mass(old, &[b1], q, m);
            for (x, p) in extra.iter().enumerate().take(w - f1) {
                joint[idx(f1, f1, f1 + x, f1 + x)] += weight * p;
            }
            return;
        }
        let shared = collision_mass(old, &[b1, b2], q, m);
        for (x, p) in shared.iter().enumerate() {
            let c = f1 + f2 + x;
            if c <= m {
                joint[idx(f1, f2, c, c)] += weight * q * p;
            }
        }
        if j > 1 {
            let apart = collision_mass_pair(old, &[b1, b2], q, m);
            for x1 in 0..w - f1 {
                for x2 in 0..w - f2 {
                    let p = apart[x1 * w + x2];
                    if p != 0.0 {
                        joint[idx(f1, f2, f1 + x1, f2 + x2)] += weight * (1.0 - q) * p;
                    }
                }
            }
        }
    });
    Ok(OracleLaw { m, s, joint })
}

impl OracleLaw {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn arity(&self) -> usize {
        self.s
    }

    pub fn total(&self) -> f64 {
        self.joint.iter().sum()
    }

    /// `Pr[f = l, C = c]` for a point query.
    pub fn point_joint(&self, l: usize, c: usize) -> f64 {
        assert_eq!(self.s, 1);
        let w = self.m + 1;
        if l > self.m || c > self.m {
            return 0.0;
        }
        self.joint[l * w + c]
    }

    /// `Pr[f = l | C = c]` for `l = 0..=c`, or `None` when `C = c` is impossible.
    pub fn point_conditional(&self, c: usize) -> Option<Vec<f64>> {
        let col: Vec<f64> = (0..=c).map(|l| self.point_joint(l, c)).collect();
        let z: f64 = col.iter().sum();
        (z > 0.0).then(|| col.iter().map(|p| p / z).collect())
    }

    /// `Pr[f1 = l1, f2 = l2, C1 = c1, C2 = c2]` for a 2-range query.
    pub fn pair_joint(&self, l1: usize, l2: usize, c1: usize, c2: usize) -> f64 {
        assert_eq!(self.s, 2);
        let w = self.m + 1;
        if [l1, l2, c1, c2].iter().any(|&v| v > self.m) {
            return 0.0;
        }
        self.joint[((l1 * w + l2) * w + c1) * w + c2]
    }

    /// `Pr[f1 = l1, f2 = l2 | C1 = c1, C2 = c2]` as a `(c1+1) × (c2+1)` table.
    pub fn pair_conditional(&self, c1: usize, c2: usize) -> Option<Vec<Vec<f64>>> {
        let table: Vec<Vec<f64>> = (0..=c1)
            .map(|l1| (0..=c2).map(|l2| self.pair_joint(l1, l2, c1, c2)).collect())
            .collect();
        let z: f64 = table.iter().flatten().sum();
        (z > 0.0).then(|| {
            table
                .into_iter()
                .map(|r| r.into_iter().map(|p| p / z).collect())
                .collect()
        })
    }
}

/// Exact law of `(f, C⁽¹⁾, C⁽²⁾)` for a point query under two independent perfect hashes.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoHashLaw {
    m: usize,
    joint: Vec<f64>,
}

pub fn two_hash_oracle(m: usize, j: usize, params: PypParams) -> Result<TwoHashLaw> {
    check_limits(m, j)?;
    let w = m + 1;
    let q = 1.0 / j as f64;
    let mut joint = vec![0.0; w * w * w];
    visit_partitions(m, 1, params, |old, new_blocks, weight| {
        let b = new_blocks[0];
        let f = old[b];
        let extra = collision_mass(old, &[b], q, m);
        for x1 in 0..w - f {
            for x2 in 0..w - f {
                joint[(f * w + f + x1) * w + f + x2] += weight * extra[x1] * extra[x2];
            }
        }
    });
    Ok(TwoHashLaw { m, joint })
}

impl TwoHashLaw {
    pub fn total(&self) -> f64 {
        self.joint.iter().sum()
    }

    pub fn conditional(&self, c1: usize, c2: usize) -> Option<Vec<f64>> {
        let w = self.m + 1;
        if c1 > self.m || c2 > self.m {
            return None;
        }
        let col: Vec<f64> = (0..=c1.min(c2)).map(|l| self.joint[(l * w + c1) * w + c2]).collect();
        let z: f64 = col.iter().sum();
        (z > 0.0).then(|| col.iter().map(|p| p / z).collect())
    }
}
