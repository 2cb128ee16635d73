//! Likelihood-free fitting of `(α, θ)` by minimum expected 1-Wasserstein
//! distance between the observed counters and counters of synthetic PYP
//! streams hashed through the same family.
//!
//! Replicate seeds depend only on the configuration seed, so every candidate
//! is scored against the same random numbers and the objective is a
//! deterministic function of `(α, θ)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::hashing::{splitmix64, HashFamily};
use crate::models::{sample_counts, symbol_token, PypParams};
use crate::sketch::SketchMatrix;

/// Flattened counters of a sketch; order is irrelevant to every consumer.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryVector {
    values: Vec<f64>,
}

impl SummaryVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return invalid("summary entries must be finite and nonnegative");
        }
        Ok(SummaryVector { values })
    }

    pub fn from_sketch(sketch: &SketchMatrix) -> Self {
        SummaryVector { values: sketch.counts().iter().map(|&c| c as f64).collect() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub m_prime: u64,
    pub replicates: usize,
    pub seed: u64,
    pub alpha_range: (f64, f64),
    pub theta_range: (f64, f64),
    pub budget: usize,
}

impl FitConfig {
    pub const DEFAULT_REPLICATES: usize = 25;
    pub const DEFAULT_BUDGET: usize = 50;
    pub const MAX_M_PRIME: u64 = 100_000;

    /// Defaults for a stream of `m` tokens: `m' = m/10` capped at 10^5.
    pub fn for_stream(m: u64) -> Self {
        FitConfig {
            m_prime: (m / 10).clamp(1, Self::MAX_M_PRIME),
            replicates: Self::DEFAULT_REPLICATES,
            seed: 0,
            alpha_range: (0.0, 0.95),
            theta_range: (1e-2, 1e3),
            budget: Self::DEFAULT_BUDGET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a0, a1) = self.alpha_range;
        let (t0, t1) = self.theta_range;
        if self.m_prime == 0 || self.replicates == 0 {
            return invalid("m' and the replicate count must be at least 1");
        }
        if !(0.0 <= a0 && a0 <= a1 && a1 < 1.0) {
            return invalid(format!("α range must lie in [0,1), got [{a0}, {a1}]"));
        }
        if !(0.0 < t0 && t0 <= t1 && t1.is_finite()) {
            return invalid(format!("θ range must lie in (0,∞), got [{t0}, {t1}]"));
        }
        if self.budget < 2 {
            return invalid("budget must allow at least two evaluations");
        }
        Ok(())
    }

    fn replicate_seed(&self, r: usize) -> u64 {
        splitmix64(self.seed ^ splitmix64(r as u64 + 1))
    }
}

/// Order-1 Wasserstein distance between two equal-size empirical measures.
pub fn wasserstein1(x: &SummaryVector, y: &SummaryVector) -> Result<f64> {
    if x.len() != y.len() {
        return invalid(format!("summaries differ in length: {} vs {}", x.len(), y.len()));
    }
    if x.is_empty() {
        return Ok(0.0);
    }
    Ok(sorted_distance(&x.sorted(), &y.sorted()))
}

fn sorted_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum::<f64>() / x.len() as f64
}

/// Counters of `m'` PYP draws hashed through `family`, scaled by `m/m'`.
pub fn synthetic_summary(params: PypParams, family: &HashFamily, m_prime: u64, m: u64, seed: u64) -> SummaryVector {
    let (n, j) = (family.rows(), family.buckets());
    let mut counts = vec![0u64; n * j];
    for (k, &c) in sample_counts(params, m_prime, seed).iter().enumerate() {
        let token = symbol_token(seed, k);
        for row in 0..n {
            counts[row * j + family.bucket(row, token)] += c;
        }
    }
    let scale = m as f64 / m_prime as f64;
    SummaryVector { values: counts.into_iter().map(|c| c as f64 * scale).collect() }
}

fn stream_len(observed: &SummaryVector, family: &HashFamily) -> Result<u64> {
    if observed.len() != family.rows() * family.buckets() {
        return invalid(format!(
            "summary has {} entries, family expects {}",
            observed.len(),
            family.rows() * family.buckets()
        ));
    }
    let row_sum: f64 = observed.values[..family.buckets()].iter().sum();
    Ok(row_sum.round() as u64)
}

fn objective_sorted(params: PypParams, sorted_obs: &[f64], m: u64, cfg: &FitConfig, family: &HashFamily) -> f64 {
    let total: f64 = (0..cfg.replicates)
        .map(|r| {
            let syn = synthetic_summary(params, family, cfg.m_prime, m, cfg.replicate_seed(r));
            sorted_distance(sorted_obs, &syn.sorted())
        })
        .sum();
    total / cfg.replicates as f64
}

/// Monte Carlo estimate of `E[W1(observed, synthetic)]` under common random numbers.
pub fn fit_objective(params: PypParams, observed: &SummaryVector, cfg: &FitConfig, family: &HashFamily) -> Result<f64> {
    cfg.validate()?;
    let m = stream_len(observed, family)?;
    Ok(objective_sorted(params, &observed.sorted(), m, cfg, family))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: PypParams,
    pub objective: f64,
    pub evaluations: usize,
    /// Every evaluated point in order.
    pub trace: Vec<(PypParams, f64)>,
}

/// Search space coordinates: `(α, log θ)`.
struct Search<'a> {
    cfg: &'a FitConfig,
    family: &'a HashFamily,
    sorted_obs: Vec<f64>,
    m: u64,
    lo: [f64; 2],
    hi: [f64; 2],
    trace: Vec<(PypParams, f64)>,
}

impl Search<'_> {
    fn clamp(&self, u: [f64; 2]) -> [f64; 2] {
        [u[0].clamp(self.lo[0], self.hi[0]), u[1].clamp(self.lo[1], self.hi[1])]
    }

    fn params(u: [f64; 2]) -> PypParams {
        PypParams { alpha: u[0], theta: u[1].exp() }
    }

    fn exhausted(&self) -> bool {
        self.trace.len() >= self.cfg.budget
    }

    fn eval(&mut self, u: [f64; 2]) -> f64 {
        let p = Self::params(self.clamp(u));
        let v = objective_sorted(p, &self.sorted_obs, self.m, self.cfg, self.family);
        self.trace.push((p, v));
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }
}

/// Latin-hypercube probe over half the budget, then Nelder–Mead from the best probe.
pub fn fit_params(observed: &SummaryVector, cfg: &FitConfig, family: &HashFamily) -> Result<FitResult> {
    cfg.validate()?;
    let m = stream_len(observed, family)?;
    let mut s = Search {
        cfg,
        family,
        sorted_obs: observed.sorted(),
        m,
        lo: [cfg.alpha_range.0, cfg.theta_range.0.ln()],
        hi: [cfg.alpha_range.1, cfg.theta_range.1.ln()],
        trace: Vec::with_capacity(cfg.budget),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let probes = (cfg.budget / 2).max(1);
    let mut strata: [Vec<usize>; 2] = [(0..probes).collect(), (0..probes).collect()];
    for column in strata.iter_mut() {
        for i in (1..probes).rev() {
            column.swap(i, rng.random_range(0..=i));
        }
    }
    let mut points = Vec::with_capacity(probes);
    for (&r0, &r1) in strata[0].iter().zip(&strata[1]) {
        let u: [f64; 2] = std::array::from_fn(|d| {
            let cell = ([r0, r1][d] as f64 + rng.random::<f64>()) / probes as f64;
            s.lo[d] + cell * (s.hi[d] - s.lo[d])
        });
        let v = s.eval(u);
        points.push((u, v));
    }
    let start = points
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one probe");
    nelder_mead(&mut s, start);

    let (params, objective) = s
        .trace
        .iter()
        .copied()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Numeric("no finite objective value within the budget".into()))?;
    Ok(FitResult { params, objective, evaluations: s.trace.len(), trace: s.trace })
}

fn nelder_mead(s: &mut Search, start: ([f64; 2], f64)) {
    let step = [0.1 * (s.hi[0] - s.lo[0]), 0.1 * (s.hi[1] - s.lo[1])];
    let mut simplex = vec![start];
    for d in 0..2 {
        if s.exhausted() {
            return;
        }
        let mut u = start.0;
        // Step inward if the start sits on the upper face.
        u[d] = if u[d] + step[d] <= s.hi[d] { u[d] + step[d] } else { u[d] - step[d] };
        let u = s.clamp(u);
        let v = s.eval(u);
        simplex.push((u, v));
    }
    let comb = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    while !s.exhausted() {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let worst = simplex[2];
        let centroid = [0.5 * (simplex[0].0[0] + simplex[1].0[0]), 0.5 * (simplex[0].0[1] + simplex[1].0[1])];
        let xr = s.clamp(comb(centroid, worst.0, -1.0));
        let fr = s.eval(xr);
        if fr < simplex[0].1 {
            if s.exhausted() {
                simplex[2] = (xr, fr);
                break;
            }
            let xe = s.clamp(comb(centroid, worst.0, -2.0));
            let fe = s.eval(xe);
            simplex[2] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[1].1 {
            simplex[2] = (xr, fr);
        } else {
            if s.exhausted() {
                break;
            }
            let (xc, fc) = if fr < worst.1 {
                let x = comb(centroid, xr, 0.5);
                (x, s.eval(x))
            } else {
                let x = comb(centroid, worst.0, 0.5);
                (x, s.eval(x))
            };
            if fc < worst.1.min(fr) {
                simplex[2] = (xc, fc);
            } else {
                for k in 1..3 {
                    if s.exhausted() {
                        break;
                    }
                    let x = comb(simplex[0].0, simplex[k].0, 0.5);
                    simplex[k] = (x, s.eval(x));
                }
            }
        }
    }
}

/// Plain-text fit record: `alpha theta objective evaluations seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRecord {
    pub params: PypParams,
    pub objective: f64,
    pub evaluations: usize,
    pub seed: u64,
}

impl FitRecord {
    pub fn to_text(&self) -> String {
        format!(
            "{} {} {} {} {}\n",
            self.params.alpha, self.params.theta, self.objective, self.evaluations, self.seed
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (lineno, line) = text
            .lines()
            .enumerate()
            .find(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .ok_or(Error::Parse { line: 1, msg: "empty params record".into() })?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |msg: String| Error::Parse { line: lineno + 1, msg };
        if fields.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", fields.len())));
        }
        let real = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
        let int = |s: &str| s.parse::<u64>().map_err(|e| bad(format!("{s:?}: {e}")));
        let params = PypParams::new(real(fields[0])?, real(fields[1])?).map_err(|e| bad(e.to_string()))?;
        Ok(FitRecord {
            params,
            objective: real(fields[2])?,
            evaluations: int(fields[3])? as usize,
            seed: int(fields[4])?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashing::draw_family;

    fn sv(v: &[f64]) -> SummaryVector {
        SummaryVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn w1_cases() {
        assert_eq!(wasserstein1(&sv(&[3.0, 1.0]), &sv(&[1.0, 3.0])).unwrap(), 0.0);
        assert_eq!(wasserstein1(&sv(&[0.0, 1.0]), &sv(&[1.0, 2.0])).unwrap(), 1.0);
        assert_eq!(wasserstein1(&sv(&[0.0, 5.0, 2.0]), &sv(&[7.5, 4.5, 2.5])).unwrap(), 2.5);
        assert!(wasserstein1(&sv(&[0.0]), &sv(&[1.0, 2.0])).is_err());
        assert!(SummaryVector::new(vec![-1.0]).is_err());
    }

    #[test]
    fn synthetic_rows_sum_to_m() {
        let fam = draw_family(3, 17, 4).unwrap();
        let s = synthetic_summary(PypParams::new(0.4, 3.0).unwrap(), &fam, 700, 2100, 9);
        let total: f64 = s.values().iter().sum();
        assert!((total - 3.0 * 2100.0).abs() < 1e-9);
        let same = synthetic_summary(PypParams::new(0.4, 3.0).unwrap(), &fam, 700, 700, 9);
        assert!(same.values().iter().all(|v| v.fract() == 0.0));
    }

    #[test]
    fn self_distance_under_common_numbers_is_zero() {
        let fam = draw_family(2, 40, 1).unwrap();
        let cfg = FitConfig { m_prime: 500, replicates: 1, ..FitConfig::for_stream(500) };
        let p = PypParams::new(0.5, 4.0).unwrap();
        let observed = synthetic_summary(p, &fam, 500, 500, cfg.replicate_seed(0));
        assert_eq!(fit_objective(p, &observed, &cfg, &fam).unwrap(), 0.0);
    }

    #[test]
    fn record_round_trip() {
        let r = FitRecord { params: PypParams::new(0.31, 12.5).unwrap(), objective: 3.25, evaluations: 50, seed: 7 };
        assert_eq!(FitRecord::from_text(&r.to_text()).unwrap(), r);
        assert!(FitRecord::from_text("0.1 2 3").is_err());
        assert!(FitRecord::from_text("1.5 2 3 4 5").is_err());
    }

    #[test]
    fn fit_respects_budget_and_box() {
        let fam = draw_family(2, 50, 3).unwrap();
        let truth = PypParams::new(0.6, 5.0).unwrap();
        let observed = synthetic_summary(truth, &fam, 5000, 5000, 1234);
        let cfg = FitConfig { m_prime: 1000, replicates: 4, budget: 24, seed: 5, ..FitConfig::for_stream(5000) };
        let r = fit_params(&observed, &cfg, &fam).unwrap();
        assert_eq!(r.evaluations, 24);
        assert!(r.trace.iter().all(|(p, _)| p.alpha >= 0.0 && p.alpha <= 0.95 && p.theta >= 0.0099 && p.theta <= 1000.01));
        assert!(r.trace.iter().all(|(_, v)| *v >= r.objective));
        let again = fit_params(&observed, &cfg, &fam).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn fit_beats_fresh_random_probes() {
        let fam = draw_family(2, 64, 9).unwrap();
        let observed = synthetic_summary(PypParams::new(0.4, 10.0).unwrap(), &fam, 8000, 8000, 77);
        let cfg = FitConfig { m_prime: 2000, replicates: 5, budget: 40, seed: 3, ..FitConfig::for_stream(8000) };
        let r = fit_params(&observed, &cfg, &fam).unwrap();
        let mut state = 0x51u64;
        let mut unit = || {
            state = crate::hashing::splitmix64(state);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let alpha = 0.95 * unit();
            let theta = (1e-2f64.ln() + unit() * (1e3f64 / 1e-2).ln()).exp();
            let probe = fit_objective(PypParams::new(alpha, theta).unwrap(), &observed, &cfg, &fam).unwrap();
            assert!(r.objective <= probe, "fit {} vs probe ({alpha}, {theta}) {probe}", r.objective);
        }
    }
}
