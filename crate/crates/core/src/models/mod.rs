//! The generative side: prior parameters, the predictive sampler, the DP
//! marginal frequency law, the Dirichlet-multinomial sketch likelihood and
//! the exhaustive enumeration oracle.

mod oracle;
mod sampler;

pub use oracle::{enumeration_oracle, two_hash_oracle, OracleLaw, TwoHashLaw};
pub use sampler::{sample_counts, sample_stream, symbol_token, PartitionStats, PypSampler, SampledStream};

use crate::error::{invalid, Result};
use crate::pmf::PosteriorPmf;
use crate::specialfn::{ln_factorial, ln_rising};

/// Pitman–Yor prior parameters; `alpha = 0` is the Dirichlet process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PypParams {
    pub alpha: f64,
    pub theta: f64,
}

impl PypParams {
    pub fn new(alpha: f64, theta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return invalid(format!("discount must lie in [0,1), got {alpha}"));
        }
        if !(theta > -alpha) || !theta.is_finite() {
            return invalid(format!("concentration must exceed −α = {}, got {theta}", -alpha));
        }
        Ok(PypParams { alpha, theta })
    }

    pub fn dirichlet(theta: f64) -> Result<Self> {
        Self::new(0.0, theta)
    }

    pub fn is_dirichlet(&self) -> bool {
        self.alpha == 0.0
    }
}

/// Law of the frequency, within the first `m` draws, of the symbol drawn at step `m+1` under a DP.
pub fn dp_marginal_pmf(m: usize, theta: f64) -> Result<PosteriorPmf> {
    if !(theta > 0.0) {
        return invalid(format!("DP concentration must be positive, got {theta}"));
    }
    let mf = m as f64;
    let head = theta.ln() - (theta + mf).ln();
    let weights = (0..=m)
        .map(|l| head + ln_rising(mf - l as f64 + 1.0, l) - ln_rising(theta + mf - l as f64, l))
        .collect();
    PosteriorPmf::from_log_weights(weights)
}

/// Dirichlet-multinomial log-likelihood of a sketch's row-major counts with `j` buckets per row.
pub fn dm_log_likelihood(counts: &[u64], j: usize, theta: f64) -> Result<f64> {
    if j == 0 || counts.is_empty() || counts.len() % j != 0 {
        return invalid("counts must hold whole rows of j buckets");
    }
    if !(theta > 0.0) {
        return invalid(format!("DP concentration must be positive, got {theta}"));
    }
    let rows: Vec<&[u64]> = counts.chunks(j).collect();
    let m: u64 = rows[0].iter().sum();
    if rows.iter().any(|r| r.iter().sum::<u64>() != m) {
        return invalid("rows of the sketch have different totals");
    }
    let share = theta / j as f64;
    let per_row_const = ln_factorial(m as usize) - ln_rising(theta, m as usize);
    let mut total = 0.0;
    for row in rows {
        total += per_row_const;
        for &c in row {
            total += ln_rising(share, c as usize) - ln_factorial(c as usize);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(PypParams::new(1.0, 1.0).is_err());
        assert!(PypParams::new(-0.1, 1.0).is_err());
        assert!(PypParams::new(0.5, -0.5).is_err());
        assert!(PypParams::new(0.5, -0.4).is_ok());
        assert!(PypParams::new(0.0, 0.0).is_err());
    }

    #[test]
    fn dp_marginal_values() {
        let p = dp_marginal_pmf(1, 1.0).unwrap();
        assert!((p.prob(0) - 0.5).abs() < 1e-15 && (p.prob(1) - 0.5).abs() < 1e-15);
        let q = dp_marginal_pmf(7, 2.5).unwrap();
        assert!((q.prob(0) - 2.5 / 9.5).abs() < 1e-14);
        assert!((q.total() - 1.0).abs() < 1e-12);
        assert!(dp_marginal_pmf(3, 0.0).is_err());
    }

    #[test]
    fn dm_likelihood_values() {
        assert_eq!(dm_log_likelihood(&[0, 0, 0], 3, 2.0).unwrap(), 0.0);
        for theta in [0.1, 1.0, 30.0] {
            assert!(dm_log_likelihood(&[9], 1, theta).unwrap().abs() < 1e-12);
        }
        let v = dm_log_likelihood(&[1, 1], 2, 2.0).unwrap();
        assert!((v - (1.0f64 / 3.0).ln()).abs() < 1e-14);
        assert!(dm_log_likelihood(&[1, 1, 2, 1], 2, 2.0).is_err());
        let a = dm_log_likelihood(&[4, 0, 7, 3, 1, 7], 3, 1.7).unwrap();
        let b = dm_log_likelihood(&[0, 7, 4, 7, 3, 1], 3, 1.7).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
