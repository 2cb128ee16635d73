use crate::error::{invalid, Error, Result};
use crate::specialfn::log_sum_exp;

/// A distribution over `{0, …, L}` stored as normalized log-probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorPmf {
    log_probs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Summary {
    Mean,
    Median,
    Mode,
}

impl std::str::FromStr for Summary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Summary::Mean),
            "median" => Ok(Summary::Median),
            "mode" => Ok(Summary::Mode),
            other => invalid(format!("unknown summary {other:?}")),
        }
    }
}

impl PosteriorPmf {
    /// Normalizes unnormalized log-weights by log-sum-exp.
    pub fn from_log_weights(mut log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.is_empty() {
            return invalid("empty support");
        }
        let z = log_sum_exp(&log_weights);
        if !z.is_finite() {
            return Err(Error::Numeric(format!("cannot normalize log-weights (log-sum = {z})")));
        }
        for w in &mut log_weights {
            *w -= z;
        }
        Ok(PosteriorPmf { log_probs: log_weights })
    }

    pub fn point_mass(at: usize) -> Self {
        let mut log_probs = vec![f64::NEG_INFINITY; at + 1];
        log_probs[at] = 0.0;
        PosteriorPmf { log_probs }
    }

    pub fn support_max(&self) -> usize {
        self.log_probs.len() - 1
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn prob(&self, l: usize) -> f64 {
        self.log_probs.get(l).map_or(0.0, |lp| lp.exp())
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|lp| lp.exp()).collect()
    }

    pub fn total(&self) -> f64 {
        self.probs().iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.log_probs
            .iter()
            .enumerate()
            .map(|(l, lp)| l as f64 * lp.exp())
            .sum()
    }

    /// Smallest `l` with `Pr[X ≤ l] ≥ q`.
    pub fn quantile(&self, q: f64) -> usize {
        let mut acc = 0.0;
        for (l, lp) in self.log_probs.iter().enumerate() {
            acc += lp.exp();
            if acc >= q * (1.0 - 1e-12) {
                return l;
            }
        }
        self.support_max()
    }

    pub fn median(&self) -> usize {
        self.quantile(0.5)
    }

    /// Argmax, ties going to the smallest `l`.
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (l, &lp) in self.log_probs.iter().enumerate() {
            if lp > self.log_probs[best] {
                best = l;
            }
        }
        best
    }
}

pub fn posterior_summary(pmf: &PosteriorPmf, kind: Summary) -> f64 {
    match kind {
        Summary::Mean => pmf.mean(),
        Summary::Median => pmf.median() as f64,
        Summary::Mode => pmf.mode() as f64,
    }
}
