use crate::error::{invalid, Error, Result};
use crate::pmf::PosteriorPmf;
use crate::sketch::HashedRow;
use crate::specialfn::{ln_factorial, ln_rising, log_sum_exp, rising_signed, LogValue};

/// Joint posterior of the frequencies of two tokens, indexed `[l1][l2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPosterior2 {
    log_probs: Vec<Vec<f64>>,
}

impl JointPosterior2 {
    /// Normalizes a matrix of log weights.
    pub fn from_log_weights(mut log_weights: Vec<Vec<f64>>) -> Result<Self> {
        if log_weights.is_empty() || log_weights[0].is_empty() {
            return invalid("joint posterior needs a nonempty support");
        }
        let width = log_weights[0].len();
        if log_weights.iter().any(|r| r.len() != width) {
            return invalid("joint posterior rows differ in length");
        }
        let flat: Vec<f64> = log_weights.iter().flatten().copied().collect();
        let total = log_sum_exp(&flat);
        if !total.is_finite() {
            return Err(Error::Numeric("joint posterior weights do not normalize".into()));
        }
        for v in log_weights.iter_mut().flatten() {
            *v -= total;
        }
        Ok(JointPosterior2 { log_probs: log_weights })
    }

    pub fn point_mass(l1: usize, l2: usize) -> Self {
        let mut w = vec![vec![f64::NEG_INFINITY; l2 + 1]; l1 + 1];
        w[l1][l2] = 0.0;
        JointPosterior2 { log_probs: w }
    }

    /// `(L1, L2)`.
    pub fn support_max(&self) -> (usize, usize) {
        (self.log_probs.len() - 1, self.log_probs[0].len() - 1)
    }

    pub fn log_probs(&self) -> &[Vec<f64>] {
        &self.log_probs
    }

    pub fn prob(&self, l1: usize, l2: usize) -> f64 {
        self.log_probs.get(l1).and_then(|r| r.get(l2)).map_or(0.0, |v| v.exp())
    }

    pub fn total(&self) -> f64 {
        self.log_probs.iter().flatten().map(|v| v.exp()).sum()
    }

    pub fn marginal_first(&self) -> PosteriorPmf {
        let w = self.log_probs.iter().map(|r| log_sum_exp(r)).collect();
        PosteriorPmf::from_log_weights(w).expect("rows of a normalized joint")
    }

    pub fn marginal_second(&self) -> PosteriorPmf {
        let (_, l2) = self.support_max();
        let w = (0..=l2)
            .map(|b| log_sum_exp(&self.log_probs.iter().map(|r| r[b]).collect::<Vec<_>>()))
            .collect();
        PosteriorPmf::from_log_weights(w).expect("columns of a normalized joint")
    }
}

/// `log` of `(x)_(n) / n!` as a signed value, zero when `n < 0`.
fn rising_over_fact(x: f64, n: i64) -> LogValue {
    if n < 0 {
        return LogValue::ZERO;
    }
    let n = n as usize;
    if x > 0.0 {
        LogValue::from_log(ln_rising(x, n) - ln_factorial(n))
    } else {
        rising_signed(x, n) * LogValue::from_log(-ln_factorial(n))
    }
}

struct Range2 {
    theta: f64,
    j: f64,
    m: i64,
}

impl Range2 {
    fn share(&self) -> f64 {
        self.theta / self.j
    }

    fn log_den(&self, c1: i64, c2: i64) -> LogValue {
        let (t, tj, j) = (self.theta, self.share(), self.j);
        let mut den = LogValue::ZERO;
        if c1 == c2 {
            let c = c1;
            // (θ/J)_(c+2)/c! = (c+1)(c+2) · (θ/J)_(c+2)/(c+2)!
            let shared = LogValue::from_f64(j * ((c + 1) * (c + 2)) as f64)
                * rising_over_fact(tj, c + 2)
                * rising_over_fact(t - tj, self.m - c);
            den = den.add(shared);
        }
        let split = LogValue::from_f64(j * (j - 1.0) * ((c1 + 1) * (c2 + 1)) as f64)
            * rising_over_fact(tj, c1 + 1)
            * rising_over_fact(tj, c2 + 1)
            * rising_over_fact(t - 2.0 * tj, self.m - c1 - c2);
        den.add(split)
    }

    fn log_num(&self, c1: i64, c2: i64, l1: i64, l2: i64) -> LogValue {
        let (t, tj, j) = (self.theta, self.share(), self.j);
        let mut num = LogValue::ZERO;
        if c1 == c2 {
            let c = c1;
            let rest = rising_over_fact(t - tj, self.m - c);
            if l1 == l2 {
                let same = LogValue::from_f64(t * (l1 + 1) as f64) * rising_over_fact(tj, c - l1) * rest;
                num = num.add(same);
            }
            let shared = LogValue::from_f64(t * t / j) * rising_over_fact(tj, c - l1 - l2) * rest;
            num = num.add(shared);
        }
        let split = LogValue::from_f64((j - 1.0) / j * t * t)
            * rising_over_fact(tj, c1 - l1)
            * rising_over_fact(tj, c2 - l2)
            * rising_over_fact(t - 2.0 * tj, self.m - c1 - c2);
        num.add(split)
    }

    fn log_kernel(&self, c1: u64, c2: u64, l1_max: u64, l2_max: u64) -> Result<Vec<Vec<f64>>> {
        let (c1, c2) = (c1 as i64, c2 as i64);
        if c1.max(c2) > self.m {
            return invalid(format!("hashed counts ({c1}, {c2}) exceed stream length {}", self.m));
        }
        let den = self.log_den(c1, c2);
        if den.is_zero() {
            return Err(Error::InvalidArgument(format!(
                "counts ({c1}, {c2}) in distinct buckets have zero probability with m = {}",
                self.m
            )));
        }
        let mut out = Vec::with_capacity(l1_max as usize + 1);
        for l1 in 0..=l1_max as i64 {
            let row = (0..=l2_max as i64)
                .map(|l2| {
                    let v = self.log_num(c1, c2, l1, l2) / den;
                    if v.sign < 0 {
                        f64::NAN
                    } else {
                        v.ln()
                    }
                })
                .collect::<Vec<_>>();
            if row.iter().any(|v| v.is_nan()) {
                return Err(Error::Numeric(format!("negative joint weight at c = ({c1}, {c2})")));
            }
            out.push(row);
        }
        Ok(out)
    }
}

fn check(theta: f64, j: usize) -> Result<()> {
    if !(theta > 0.0) || !theta.is_finite() {
        return invalid(format!("DP concentration must be positive and finite, got {theta}"));
    }
    if j == 0 {
        return invalid("range queries need J ≥ 1");
    }
    Ok(())
}

/// Joint posterior of `(f1, f2)` for two new draws hashed to counters `c1`, `c2`
/// of a single hash over a stream of `m` tokens, under a DP(θ) prior.
pub fn dp_range2_single(theta: f64, j: usize, m: u64, c1: u64, c2: u64) -> Result<JointPosterior2> {
    check(theta, j)?;
    let r = Range2 { theta, j: j as f64, m: m as i64 };
    JointPosterior2::from_log_weights(r.log_kernel(c1, c2, c1, c2)?)
}

/// Product of single-hash joint kernels over the rows of both tokens.
pub fn dp_range2_multi(
    theta: f64,
    j: usize,
    m: u64,
    rows: (&HashedRow, &HashedRow),
) -> Result<JointPosterior2> {
    check(theta, j)?;
    let (a, b) = rows;
    if a.values.len() != b.values.len() {
        return invalid(format!("rows have {} and {} hashes", a.values.len(), b.values.len()));
    }
    if a.values.is_empty() {
        return invalid("hashed rows are empty");
    }
    let (l1, l2) = (a.min(), b.min());
    let r = Range2 { theta, j: j as f64, m: m as i64 };
    let mut acc = vec![vec![0.0; l2 as usize + 1]; l1 as usize + 1];
    for (&c1, &c2) in a.values.iter().zip(&b.values) {
        let k = r.log_kernel(c1, c2, l1, l2)?;
        for (ra, rk) in acc.iter_mut().zip(k) {
            for (x, y) in ra.iter_mut().zip(rk) {
                *x += y;
            }
        }
    }
    JointPosterior2::from_log_weights(acc)
}

/// Law of `f1 + f2` under a joint posterior.
pub fn range_sum_posterior(joint: &JointPosterior2) -> PosteriorPmf {
    let (l1, l2) = joint.support_max();
    let mut buckets = vec![Vec::new(); l1 + l2 + 1];
    for (a, row) in joint.log_probs.iter().enumerate() {
        for (b, &v) in row.iter().enumerate() {
            buckets[a + b].push(v);
        }
    }
    let w = buckets.iter().map(|b| log_sum_exp(b)).collect();
    PosteriorPmf::from_log_weights(w).expect("sums of a normalized joint")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{enumeration_oracle, PypParams};

    #[test]
    fn matches_oracle() {
        for (m, j, theta) in [(3usize, 2usize, 1.0), (4, 3, 2.5), (2, 2, 0.5), (3, 1, 2.0)] {
            let law = enumeration_oracle(m, j, PypParams::dirichlet(theta).unwrap(), 2).unwrap();
            for c1 in 0..=m {
                for c2 in 0..=m {
                    let Some(want) = law.pair_conditional(c1, c2) else { continue };
                    let got = dp_range2_single(theta, j, m as u64, c1 as u64, c2 as u64).unwrap();
                    for (l1, row) in want.iter().enumerate() {
                        for (l2, &w) in row.iter().enumerate() {
                            assert!((got.prob(l1, l2) - w).abs() < 1e-12, "{m} {j} ({c1},{c2}) ({l1},{l2})");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn symmetric() {
        for (c1, c2) in [(3, 5), (4, 4), (0, 7)] {
            let a = dp_range2_single(2.0, 5, 20, c1, c2).unwrap();
            let b = dp_range2_single(2.0, 5, 20, c2, c1).unwrap();
            for l1 in 0..=c1 as usize {
                for l2 in 0..=c2 as usize {
                    assert!((a.prob(l1, l2) - b.prob(l2, l1)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn errors() {
        assert!(dp_range2_single(1.0, 1, 5, 1, 1).is_err());
        assert!(dp_range2_single(1.0, 2, 5, 3, 4).is_err());
        assert!(dp_range2_single(1.0, 2, 5, 3, 3).is_ok());
        let a = HashedRow::new(vec![1, 2]);
        let b = HashedRow::new(vec![1]);
        assert!(dp_range2_multi(1.0, 2, 5, (&a, &b)).is_err());
    }

    #[test]
    fn sum_law() {
        let p = range_sum_posterior(&JointPosterior2::point_mass(2, 3));
        assert_eq!(p.mode(), 5);
        let joint = dp_range2_single(3.0, 4, 200, 12, 30).unwrap();
        let s = range_sum_posterior(&joint);
        assert!((s.total() - 1.0).abs() < 1e-12);
        let lin = joint.marginal_first().mean() + joint.marginal_second().mean();
        assert!((s.mean() - lin).abs() < 1e-10);
    }

    #[test]
    fn large_stream_does_not_overflow() {
        let joint = dp_range2_single(50.0, 320, 1_000_000, 4000, 4000).unwrap();
        assert!((joint.total() - 1.0).abs() < 1e-10);
    }
}
