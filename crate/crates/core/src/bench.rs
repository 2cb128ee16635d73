//! Binned mean-absolute-error comparison of frequency estimators against exact counts.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::fit::{fit_params, FitConfig, FitResult, SummaryVector};
use crate::hashing::draw_family;
use crate::pmf::{posterior_summary, Summary};
use crate::posterior::{dp_posterior_multi, fit_theta_empirical_bayes, pyp_posterior_multi, PypPosteriorContext};
use crate::sketch::{cmm_estimate, cms_estimate, HashedRow, SketchMatrix};

/// True-frequency bins `(lo, hi]`.
pub const BINS: [(u64, u64); 9] =
    [(0, 1), (1, 2), (2, 4), (4, 8), (8, 16), (16, 32), (32, 64), (64, 128), (128, 256)];

pub fn bin_of(f: u64) -> Option<usize> {
    BINS.iter().position(|&(lo, hi)| f > lo && f <= hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Truth,
    Cms,
    Cmm,
    Dp(Summary),
    Pyp(Summary),
}

impl Estimator {
    pub const ALL_NAMES: &'static str =
        "truth, cms, cmm, dp-mean, dp-median, dp-mode, pyp-mean, pyp-median, pyp-mode";

    pub fn needs_dp(self) -> bool {
        matches!(self, Estimator::Dp(_))
    }

    pub fn needs_pyp(self) -> bool {
        matches!(self, Estimator::Pyp(_))
    }
}

fn summary_name(s: Summary) -> &'static str {
    match s {
        Summary::Mean => "mean",
        Summary::Median => "median",
        Summary::Mode => "mode",
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimator::Truth => f.write_str("truth"),
            Estimator::Cms => f.write_str("cms"),
            Estimator::Cmm => f.write_str("cmm"),
            Estimator::Dp(s) => write!(f, "dp-{}", summary_name(*s)),
            Estimator::Pyp(s) => write!(f, "pyp-{}", summary_name(*s)),
        }
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let summary = |x: &str| x.parse::<Summary>();
        match s {
            "truth" => Ok(Estimator::Truth),
            "cms" => Ok(Estimator::Cms),
            "cmm" => Ok(Estimator::Cmm),
            _ => match s.split_once('-') {
                Some(("dp", k)) => Ok(Estimator::Dp(summary(k)?)),
                Some(("pyp", k)) => Ok(Estimator::Pyp(summary(k)?)),
                _ => invalid(format!("unknown estimator {s:?}; expected one of {}", Self::ALL_NAMES)),
            },
        }
    }
}

/// Everything needed to turn a hashed row into any estimator's answer.
pub struct EstimatorSet<'a> {
    pub sketch: &'a SketchMatrix,
    pub dp_theta: Option<f64>,
    pub pyp: Option<&'a PypPosteriorContext>,
}

impl EstimatorSet<'_> {
    pub fn estimate(&self, est: Estimator, row: &HashedRow, truth: u64) -> Result<f64> {
        let missing = |what: &str| Error::InvalidArgument(format!("{est} needs fitted {what} parameters"));
        match est {
            Estimator::Truth => Ok(truth as f64),
            Estimator::Cms => Ok(cms_estimate(row) as f64),
            Estimator::Cmm => cmm_estimate(row, self.sketch.total(), self.sketch.buckets()),
            Estimator::Dp(s) => {
                let theta = self.dp_theta.ok_or_else(|| missing("DP"))?;
                Ok(posterior_summary(&dp_posterior_multi(theta, self.sketch.buckets(), row)?, s))
            }
            Estimator::Pyp(s) => {
                let ctx = self.pyp.ok_or_else(|| missing("PYP"))?;
                Ok(posterior_summary(&pyp_posterior_multi(ctx, row)?, s))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedMaeReport {
    pub label: String,
    pub estimators: Vec<Estimator>,
    pub tokens: [usize; 9],
    /// `mae[e][b]`; NaN for empty bins.
    pub mae: Vec<[f64; 9]>,
}

impl BinnedMaeReport {
    /// Accumulates `(true frequency, estimate per estimator)` pairs.
    pub fn from_errors(label: String, estimators: Vec<Estimator>, rows: &[(u64, Vec<f64>)]) -> Self {
        let mut tokens = [0usize; 9];
        let mut sums = vec![[0.0f64; 9]; estimators.len()];
        for (f, ests) in rows {
            let Some(b) = bin_of(*f) else { continue };
            tokens[b] += 1;
            for (s, e) in sums.iter_mut().zip(ests) {
                s[b] += (e - *f as f64).abs();
            }
        }
        let mae = sums
            .into_iter()
            .map(|s| std::array::from_fn(|b| if tokens[b] == 0 { f64::NAN } else { s[b] / tokens[b] as f64 }))
            .collect();
        BinnedMaeReport { label, estimators, tokens, mae }
    }

    pub fn mae_of(&self, est: Estimator) -> Option<&[f64; 9]> {
        self.estimators.iter().position(|&e| e == est).map(|i| &self.mae[i])
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# {}\n", self.label);
        let _ = write!(out, "{:<12}{:>8}", "bin", "tokens");
        for e in &self.estimators {
            let _ = write!(out, "{:>12}", e.to_string());
        }
        out.push('\n');
        for (b, &(lo, hi)) in BINS.iter().enumerate() {
            let _ = write!(out, "{:<12}{:>8}", format!("({lo},{hi}]"), self.tokens[b]);
            for m in &self.mae {
                if m[b].is_nan() {
                    let _ = write!(out, "{:>12}", "-");
                } else {
                    let _ = write!(out, "{:>12.2}", m[b]);
                }
            }
            out.push('\n');
        }
        out
    }

    /// Rows of `config,bin_lo,bin_hi,tokens,estimator,mae`.
    pub fn to_csv(&self, with_header: bool) -> String {
        let mut out = String::new();
        if with_header {
            out.push_str("config,bin_lo,bin_hi,tokens,estimator,mae\n");
        }
        for (b, &(lo, hi)) in BINS.iter().enumerate() {
            for (e, m) in self.estimators.iter().zip(&self.mae) {
                let _ = writeln!(out, "{},{lo},{hi},{},{e},{}", self.label, self.tokens[b], m[b]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub j: usize,
    pub n: usize,
    pub hash_seed: u64,
    pub estimators: Vec<Estimator>,
    /// Fitting options for the PYP prior; `m'` is rescaled to the stream when `None`.
    pub fit: Option<FitConfig>,
    pub fit_seed: u64,
    /// Query a uniform sample of this many distinct tokens instead of all of them.
    pub sample_tokens: Option<usize>,
}

impl BenchConfig {
    pub fn new(j: usize, n: usize, hash_seed: u64, estimators: Vec<Estimator>) -> Self {
        BenchConfig { j, n, hash_seed, estimators, fit: None, fit_seed: hash_seed, sample_tokens: None }
    }
}

#[derive(Debug, Clone)]
pub struct BenchRun {
    pub report: BinnedMaeReport,
    pub dp_theta: Option<f64>,
    pub pyp_fit: Option<FitResult>,
}

/// Sketches the stream, fits the priors the estimators need, and scores every
/// distinct token whose true frequency falls in a bin.
pub fn run_bench(stream: &[u64], cfg: &BenchConfig) -> Result<BenchRun> {
    if stream.is_empty() {
        return invalid("benchmark stream is empty");
    }
    let family = draw_family(cfg.n, cfg.j, cfg.hash_seed)?;
    let mut sketch = SketchMatrix::new(family.clone());
    sketch.extend(stream.iter().copied());
    let m = sketch.total();

    let mut truth: HashMap<u64, u64> = HashMap::new();
    for &t in stream {
        *truth.entry(t).or_default() += 1;
    }
    let mut queried: Vec<(u64, u64)> = truth.into_iter().filter(|&(_, f)| bin_of(f).is_some()).collect();
    queried.sort_unstable();
    if let Some(k) = cfg.sample_tokens {
        if k < queried.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.hash_seed ^ 0x5a3b_1e00);
            queried.shuffle(&mut rng);
            queried.truncate(k);
            queried.sort_unstable();
        }
    }

    let dp_theta = if cfg.estimators.iter().any(|e| e.needs_dp()) {
        Some(fit_theta_empirical_bayes(&sketch)?)
    } else {
        None
    };
    let (pyp_fit, pyp_ctx) = if cfg.estimators.iter().any(|e| e.needs_pyp()) {
        let fc = cfg.fit.clone().unwrap_or_else(|| FitConfig { seed: cfg.fit_seed, ..FitConfig::for_stream(m) });
        let fitted = fit_params(&SummaryVector::from_sketch(&sketch), &fc, &family)?;
        let ctx = PypPosteriorContext::new(fitted.params, cfg.j, m)?;
        (Some(fitted), Some(ctx))
    } else {
        (None, None)
    };

    let set = EstimatorSet { sketch: &sketch, dp_theta, pyp: pyp_ctx.as_ref() };
    let rows = queried
        .iter()
        .map(|&(token, f)| {
            let row = sketch.hashed_row(token);
            let ests = cfg
                .estimators
                .iter()
                .map(|&e| set.estimate(e, &row, f))
                .collect::<Result<Vec<_>>>()?;
            Ok((f, ests))
        })
        .collect::<Result<Vec<_>>>()?;
    let label = format!("J={} N={}", cfg.j, cfg.n);
    Ok(BenchRun {
        report: BinnedMaeReport::from_errors(label, cfg.estimators.clone(), &rows),
        dp_theta,
        pyp_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins() {
        assert_eq!(bin_of(0), None);
        assert_eq!(bin_of(1), Some(0));
        assert_eq!(bin_of(2), Some(1));
        assert_eq!(bin_of(3), Some(2));
        assert_eq!(bin_of(16), Some(4));
        assert_eq!(bin_of(17), Some(5));
        assert_eq!(bin_of(256), Some(8));
        assert_eq!(bin_of(257), None);
    }

    #[test]
    fn estimator_names_round_trip() {
        for name in Estimator::ALL_NAMES.split(", ") {
            assert_eq!(name.parse::<Estimator>().unwrap().to_string(), name);
        }
        assert!("pyp-best".parse::<Estimator>().is_err());
        assert!("foo".parse::<Estimator>().is_err());
    }

    #[test]
    fn truth_echo_is_exact_and_cms_overestimates() {
        let stream: Vec<u64> = (0..3000u64).map(|i| (i * i) % 97).collect();
        let cfg = BenchConfig::new(16, 2, 5, vec![Estimator::Truth, Estimator::Cms]);
        let run = run_bench(&stream, &cfg).unwrap();
        let r = &run.report;
        assert!(r.mae_of(Estimator::Truth).unwrap().iter().all(|v| v.is_nan() || *v == 0.0));
        assert!(r.tokens.iter().sum::<usize>() > 0);
        assert!(r.to_text().contains("(0,1]"));
        assert_eq!(r.to_csv(true).lines().count(), 1 + 9 * 2);
    }
}
