use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use super::integral::{default_step, IntegralEngine};
use super::{dp_posterior_multi_with, ProductForm};
use crate::error::{invalid, Error, Result};
use crate::models::PypParams;
use crate::pmf::PosteriorPmf;
use crate::sketch::HashedRow;
use crate::specialfn::{
    gfc_table, ln_binomial, ln_rising, log_pgf_distinct, log_sum_exp, rising_signed, GfcTable, LogValue,
};

/// Largest stream length served by the finite-sum path.
pub const EXACT_MAX_M: u64 = 60;

/// Drift of `Σ_l p(l)` from one that triggers a finer integration grid.
const DRIFT_TOL: f64 = 1e-6;

/// Kernels for hashed counts up to this size are evaluated over their full
/// support (and drift-checked); larger ones only as far as a query needs.
const FULL_KERNEL_MAX: u64 = 4096;

/// Which representation of the single-hash posterior to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvaluationPath {
    /// Finite sums for `m ≤` [`EXACT_MAX_M`], stable integrals above.
    #[default]
    Auto,
    Exact,
    Integral,
}

/// Everything the Pitman–Yor posterior needs for one sketch: prior, width,
/// stream length, and caches shared by all queries against it.
pub struct PypPosteriorContext {
    params: PypParams,
    j: usize,
    m: u64,
    form: ProductForm,
    path: EvaluationPath,
    gfc: Option<GfcTable>,
    engine: Option<IntegralEngine>,
    refined: OnceLock<Option<IntegralEngine>>,
    /// Log weights `log p(l | c)` keyed by `c`, possibly a prefix of `0..=c`.
    kernels: RwLock<HashMap<u64, Arc<Vec<f64>>>>,
}

impl std::fmt::Debug for PypPosteriorContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PypPosteriorContext")
            .field("params", &self.params)
            .field("j", &self.j)
            .field("m", &self.m)
            .field("form", &self.form)
            .field("path", &self.path)
            .finish_non_exhaustive()
    }
}

impl PypPosteriorContext {
    pub fn new(params: PypParams, j: usize, m: u64) -> Result<Self> {
        if !(params.theta > 0.0) {
            return invalid(format!("posterior evaluation needs θ > 0, got {}", params.theta));
        }
        if j == 0 {
            return invalid("bucket count must be at least 1");
        }
        let gfc = if params.alpha > 0.0 && m <= EXACT_MAX_M {
            Some(gfc_table(params.alpha, m as usize + 1)?)
        } else {
            None
        };
        let engine = if params.alpha > 0.0 && j >= 2 {
            Some(IntegralEngine::new(params, j, m, default_step(params.alpha))?)
        } else {
            None
        };
        Ok(PypPosteriorContext {
            params,
            j,
            m,
            form: ProductForm::default(),
            path: EvaluationPath::default(),
            gfc,
            engine,
            refined: OnceLock::new(),
            kernels: RwLock::new(HashMap::new()),
        })
    }

    pub fn with_form(mut self, form: ProductForm) -> Self {
        self.form = form;
        self
    }

    pub fn with_path(mut self, path: EvaluationPath) -> Self {
        self.path = path;
        self.kernels.get_mut().unwrap_or_else(|e| e.into_inner()).clear();
        self
    }

    pub fn params(&self) -> PypParams {
        self.params
    }

    pub fn buckets(&self) -> usize {
        self.j
    }

    pub fn stream_len(&self) -> u64 {
        self.m
    }

    fn check_count(&self, c: u64) -> Result<()> {
        if c > self.m {
            return invalid(format!("hashed count {c} exceeds stream length {}", self.m));
        }
        Ok(())
    }

    fn use_exact(&self) -> bool {
        match self.path {
            EvaluationPath::Exact => true,
            EvaluationPath::Integral => false,
            EvaluationPath::Auto => self.m <= EXACT_MAX_M || self.engine.is_none(),
        }
    }

    fn refined_engine(&self) -> Option<&IntegralEngine> {
        self.refined
            .get_or_init(|| {
                let base = self.engine.as_ref()?;
                IntegralEngine::new(self.params, self.j, self.m, base.step() / 2.0).ok()
            })
            .as_ref()
    }

    /// Integral-path log weights over `0..=c`, refined once if they drift.
    fn integral_full(&self, c: u64) -> Result<Vec<f64>> {
        let engine = self
            .engine
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("the stable-integral path needs α > 0 and J ≥ 2".into()))?;
        let w = engine.log_posterior_weights(c, c)?;
        if (log_sum_exp(&w).exp() - 1.0).abs() <= DRIFT_TOL {
            return Ok(w);
        }
        match self.refined_engine() {
            Some(fine) => fine.log_posterior_weights(c, c),
            None => Ok(w),
        }
    }

    /// `log p(l | c)` for `l = 0..=min(c, l_max)`, cached.
    fn kernel(&self, c: u64, l_max: u64) -> Result<Arc<Vec<f64>>> {
        let need = c.min(l_max) as usize + 1;
        if let Some(k) = self.kernels.read().unwrap_or_else(|e| e.into_inner()).get(&c) {
            if k.len() >= need {
                return Ok(k.clone());
            }
        }
        let fresh = if self.use_exact() {
            exact_log_weights(self, c)?
        } else if c <= FULL_KERNEL_MAX {
            self.integral_full(c)?
        } else {
            let engine = self.engine.as_ref().expect("integral path implies an engine");
            // Grow geometrically so repeated deeper queries stay cheap.
            let cached = self.kernels.read().unwrap_or_else(|e| e.into_inner()).get(&c).map(|k| k.len());
            let want = (need as u64).max(cached.unwrap_or(0) as u64 * 2).min(c + 1);
            engine.log_posterior_weights(c, want - 1)?
        };
        let fresh = Arc::new(fresh);
        let mut map = self.kernels.write().unwrap_or_else(|e| e.into_inner());
        let slot = map.entry(c).or_insert_with(|| fresh.clone());
        if slot.len() < fresh.len() {
            *slot = fresh.clone();
        }
        Ok(slot.clone())
    }
}

/// `log E[p^a (1−p)^b]` where `p` is the mass a PYP(α, θ') puts on a set of base measure `q`.
fn log_pyp_moment(a: usize, b: usize, q: f64, alpha: f64, theta: f64, gfc: &GfcTable) -> f64 {
    let log_q = LogValue::from_f64(q);
    let log_r = LogValue::from_f64(1.0 - q);
    let lo_a = usize::from(a > 0);
    let lo_b = usize::from(b > 0);
    let terms = (lo_a..=a).flat_map(|k| {
        (lo_b..=b).map(move |kk| {
            gfc.get(a, k) * gfc.get(b, kk) * log_q.powi(k as i32) * log_r.powi(kk as i32)
                * LogValue::from_log(ln_rising(theta / alpha, k + kk))
        })
    });
    LogValue::sum(terms).ln() - ln_rising(theta, a + b)
}

/// `log E[p^a (1−p)^b]` for `p ~ Beta(θq, θ(1−q))`, the mass a DP(θ) puts on a set of measure `q`.
fn log_beta_moment(a: usize, b: usize, q: f64, theta: f64) -> f64 {
    (rising_signed(theta * q, a) * rising_signed(theta - theta * q, b)).ln() - ln_rising(theta, a + b)
}

/// Single-hash log weights through the positive moment form; at `α = 0` the
/// moments are Beta moments and the expression collapses to the DP kernel.
fn exact_log_weights(ctx: &PypPosteriorContext, c: u64) -> Result<Vec<f64>> {
    ctx.check_count(c)?;
    let PypParams { alpha, theta } = ctx.params;
    if ctx.m > EXACT_MAX_M {
        return invalid(format!(
            "finite-sum path is capped at m = {EXACT_MAX_M}, got m = {}; use the integral path",
            ctx.m
        ));
    }
    let (m, c) = (ctx.m as usize, c as usize);
    let q = 1.0 / ctx.j as f64;
    let moment = |a: usize, b: usize, th: f64| match &ctx.gfc {
        Some(gfc) => log_pyp_moment(a, b, q, alpha, th, gfc),
        None => log_beta_moment(a, b, q, th),
    };
    let log_den = moment(c + 1, m - c, theta);
    if log_den == f64::NEG_INFINITY {
        return Err(Error::Numeric(format!("hashed count {c} has zero probability with J = {}", ctx.j)));
    }
    let head = (theta * q).ln() - ln_rising(theta, m + 1) - log_den;
    Ok((0..=c)
        .map(|l| {
            head + ln_binomial(c, l)
                + ln_rising(theta + alpha, m - l)
                + ln_rising(1.0 - alpha, l)
                + moment(c - l, m - c, theta + alpha)
        })
        .collect())
}

/// Single-hash Pitman–Yor posterior through finite sums (`m ≤` [`EXACT_MAX_M`]).
pub fn pyp_posterior_exact(ctx: &PypPosteriorContext, c: u64) -> Result<PosteriorPmf> {
    ctx.check_count(c)?;
    if c == 0 {
        return Ok(PosteriorPmf::point_mass(0));
    }
    PosteriorPmf::from_log_weights(exact_log_weights(ctx, c)?)
}

/// The same posterior written with alternating sums of generating functions
/// of `K_n`. Cancellation makes it unreliable beyond a dozen or so draws;
/// it is kept as a literal cross-check of the positive form.
pub fn pyp_posterior_alternating(ctx: &PypPosteriorContext, c: u64) -> Result<PosteriorPmf> {
    ctx.check_count(c)?;
    let gfc = match &ctx.gfc {
        Some(g) => g,
        None if ctx.params.alpha == 0.0 => return invalid("the alternating form needs α > 0"),
        None => return invalid(format!("finite-sum path is capped at m = {EXACT_MAX_M}")),
    };
    if c == 0 {
        return Ok(PosteriorPmf::point_mass(0));
    }
    let PypParams { alpha, theta } = ctx.params;
    let (m, c) = (ctx.m as usize, c as usize);
    let q = 1.0 / ctx.j as f64;
    let free = m - c;
    let signed_sum = |n_of: &dyn Fn(usize) -> usize, th: f64| -> Result<LogValue> {
        let mut acc = LogValue::ZERO;
        for i in 0..=free {
            let sign = if (free - i) % 2 == 0 { LogValue::ONE } else { -LogValue::ONE };
            let g = log_pgf_distinct(q, n_of(i), alpha, th, gfc)?;
            acc = acc.add(sign * LogValue::from_log(ln_binomial(free, i)) * g);
        }
        Ok(acc)
    };
    let den = signed_sum(&|i| m - i + 1, theta)?;
    let mut weights = Vec::with_capacity(c + 1);
    for l in 0..=c {
        let num = signed_sum(&|i| m - l - i, theta + alpha)?;
        let ratio = num / den;
        if ratio.sign < 0 {
            return Err(Error::Numeric(format!("alternating sums lost their sign at l = {l}")));
        }
        weights.push(
            (theta * q).ln() + ln_binomial(c, l) + ln_rising(theta + alpha, m - l) - ln_rising(theta, m + 1)
                + ln_rising(1.0 - alpha, l)
                + ratio.ln(),
        );
    }
    PosteriorPmf::from_log_weights(weights)
}

/// Single-hash Pitman–Yor posterior through the stable-density integrals.
pub fn pyp_posterior_integral(ctx: &PypPosteriorContext, c: u64) -> Result<PosteriorPmf> {
    ctx.check_count(c)?;
    if ctx.params.alpha == 0.0 {
        return invalid("the stable-integral path needs α > 0; use the DP posterior");
    }
    if ctx.j < 2 {
        return invalid("the stable-integral path needs J ≥ 2");
    }
    if c == 0 {
        return Ok(PosteriorPmf::point_mass(0));
    }
    PosteriorPmf::from_log_weights(ctx.integral_full(c)?)
}

/// `log Pr[f = l]` for `l = 0..=m`: the prior law of the frequency of the next draw.
pub fn pyp_marginal_log_pmf(params: PypParams, m: u64) -> Vec<f64> {
    let PypParams { alpha, theta } = params;
    let m = m as usize;
    (0..=m)
        .map(|l| {
            theta.ln() + ln_binomial(m, l) + ln_rising(theta + alpha, m - l) + ln_rising(1.0 - alpha, l)
                - ln_rising(theta, m + 1)
        })
        .collect()
}

/// Posterior of a token's frequency given all `N` of its hashed counters.
pub fn pyp_posterior_multi(ctx: &PypPosteriorContext, row: &HashedRow) -> Result<PosteriorPmf> {
    if row.values.is_empty() {
        return invalid("hashed row is empty");
    }
    if ctx.params.alpha == 0.0 {
        return dp_posterior_multi_with(ctx.params.theta, ctx.j, row, ctx.form, ctx.m);
    }
    for &c in &row.values {
        ctx.check_count(c)?;
    }
    let support = row.min();
    if support == 0 {
        return Ok(PosteriorPmf::point_mass(0));
    }
    let mut acc = vec![0.0; support as usize + 1];
    for &c in &row.values {
        let k = ctx.kernel(c, support)?;
        for (a, v) in acc.iter_mut().zip(k.iter()) {
            *a += v;
        }
    }
    if ctx.form == ProductForm::MarginalCorrected {
        let marginal = pyp_marginal_log_pmf(ctx.params, ctx.m);
        let power = 1.0 - row.values.len() as f64;
        for (a, v) in acc.iter_mut().zip(marginal) {
            *a += power * v;
        }
    }
    PosteriorPmf::from_log_weights(acc)
}

/// Posterior mean of [`pyp_posterior_multi`].
pub fn pyp_estimate(ctx: &PypPosteriorContext, row: &HashedRow) -> Result<f64> {
    Ok(pyp_posterior_multi(ctx, row)?.mean())
}
