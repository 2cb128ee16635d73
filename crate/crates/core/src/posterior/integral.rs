//! The stable-integral representation of the Pitman–Yor point-query posterior.
//!
//! With `h = e^{t+s}`, `x = e^t` both integrals factor through
//! `ρ_{θ'}(s) = ∫ G(t) G(s+t) e^{−θ' t} dt`, where `G(t) = g_α(e^t) e^t`:
//!
//! `I(A, β; θ') = ∫ ρ_{θ'}(s) exp(A(s+κ) − β log(1 + e^{s+κ})) ds`, `κ = log(J−1)/α`.
//!
//! All functions of `s` and `t` live on one uniform grid of step `δ`, so
//! each stable density value is computed once and every integral is a
//! trapezoid sum, which converges geometrically for these analytic,
//! exponentially decaying integrands. Sums walk outward from the maximum
//! of the (unimodal) log-integrand until terms fall [`DEPTH`] nats below it.
//! When the `s`-integrand is narrower than the grid, a finer local grid is
//! used with `log ρ` interpolated from the coarse grid.

use std::sync::Mutex;

use crate::error::{invalid, Error, Result};
use crate::models::PypParams;
use crate::specialfn::{ln_gamma, ln_rising, StableDensity};

/// Terms this many nats below the running maximum are dropped.
pub const DEPTH: f64 = 48.0;

const INTERP_POINTS: i64 = 6;

/// Grid step for a given discount. Coarser for small α, where every
/// feature of `G` is stretched by `1/α`; finer for α near one, where the
/// stable density sharpens.
pub fn default_step(alpha: f64) -> f64 {
    let stretch = (0.25 / alpha).clamp(1.0, 4.0);
    let squeeze = ((1.0 - alpha) / 0.3).min(1.0);
    0.05 * stretch * squeeze
}

#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Values on integer grid indices, filled on demand.
#[derive(Debug, Default)]
struct LazyLine {
    offset: i64,
    vals: Vec<f64>,
}

impl LazyLine {
    #[inline]
    fn get(&mut self, i: i64, f: impl FnOnce(i64) -> f64) -> f64 {
        if self.vals.is_empty() {
            self.offset = i;
            self.vals.push(f(i));
            return self.vals[0];
        }
        if i < self.offset {
            let grow = (self.offset - i) as usize;
            let grow = grow.max(self.vals.len() / 2).max(64);
            let mut fresh = vec![f64::NAN; grow];
            fresh.extend_from_slice(&self.vals);
            self.vals = fresh;
            self.offset -= grow as i64;
        }
        let idx = (i - self.offset) as usize;
        if idx >= self.vals.len() {
            let new_len = (idx + 1).max(self.vals.len() * 3 / 2).max(self.vals.len() + 64);
            self.vals.resize(new_len, f64::NAN);
        }
        let v = self.vals[idx];
        if !v.is_nan() {
            return v;
        }
        let v = f(i);
        self.vals[idx] = v;
        v
    }

    fn peek(&mut self, i: i64) -> f64 {
        self.get(i, |_| f64::NAN)
    }

    /// Stores `v` at `i`; the slot must already exist (see [`LazyLine::peek`]).
    fn set(&mut self, i: i64, v: f64) {
        let idx = (i - self.offset) as usize;
        self.vals[idx] = v;
    }
}

/// Log-sum-exp of `f` over the integers, walking from the maximum of a
/// unimodal `f` until terms drop `DEPTH` below it. Returns `(log Σ, argmax)`.
fn walk_sum(mut f: impl FnMut(i64) -> f64, start: i64) -> (f64, i64) {
    let mut best = start;
    let mut fbest = f(best);
    loop {
        let right = f(best + 1);
        if right > fbest {
            best += 1;
            fbest = right;
            continue;
        }
        let left = f(best - 1);
        if left > fbest {
            best -= 1;
            fbest = left;
            continue;
        }
        break;
    }
    if fbest == f64::NEG_INFINITY {
        return (f64::NEG_INFINITY, best);
    }
    let mut total = 1.0;
    for dir in [1i64, -1] {
        let mut i = best + dir;
        loop {
            let v = f(i) - fbest;
            if v < -DEPTH {
                break;
            }
            total += v.exp();
            i += dir;
        }
    }
    (fbest + total.ln(), best)
}

struct Tables {
    /// `G(iδ) = log g_α(e^{iδ}) + iδ`.
    g: LazyLine,
    /// `log ρ_{θ+α}(kδ)` and `log ρ_θ(kδ)`, including the factor `δ`.
    rho_num: LazyLine,
    rho_den: LazyLine,
    hint_num: Option<i64>,
    hint_den: Option<i64>,
    g_peak: Option<i64>,
}

/// Evaluates the single-hash posterior through the stable integrals for a fixed `(α, θ, J, m)`.
pub struct IntegralEngine {
    params: PypParams,
    m: u64,
    delta: f64,
    kappa: f64,
    density: StableDensity,
    tables: Mutex<Tables>,
}

impl IntegralEngine {
    pub fn new(params: PypParams, j: usize, m: u64, delta: f64) -> Result<Self> {
        if !(params.alpha > 0.0) {
            return invalid("the stable-integral path needs α > 0");
        }
        if j < 2 {
            return invalid("the stable-integral path needs J ≥ 2");
        }
        if !(delta > 0.0) {
            return invalid("grid step must be positive");
        }
        Ok(IntegralEngine {
            params,
            m,
            delta,
            kappa: ((j - 1) as f64).ln() / params.alpha,
            density: StableDensity::new(params.alpha)?,
            tables: Mutex::new(Tables {
                g: LazyLine::default(),
                rho_num: LazyLine::default(),
                rho_den: LazyLine::default(),
                hint_num: None,
                hint_den: None,
                g_peak: None,
            }),
        })
    }

    pub fn step(&self) -> f64 {
        self.delta
    }

    fn g_at(&self, t: &mut Tables, i: i64) -> f64 {
        let density = &self.density;
        let u = i as f64 * self.delta;
        t.g.get(i, |_| density.logpdf(u.exp()) + u)
    }

    fn g_peak(&self, t: &mut Tables) -> i64 {
        if let Some(p) = t.g_peak {
            return p;
        }
        let (_, p) = walk_sum(|i| self.g_at(t, i), 0);
        t.g_peak = Some(p);
        p
    }

    /// `log ρ_{θ'}(kδ)` with `θ' = θ + α` when `numerator`, else `θ' = θ`.
    fn rho_at(&self, t: &mut Tables, k: i64, numerator: bool) -> f64 {
        let cached = if numerator { t.rho_num.peek(k) } else { t.rho_den.peek(k) };
        if !cached.is_nan() {
            return cached;
        }
        let tilt = if numerator { self.params.theta + self.params.alpha } else { self.params.theta };
        let delta = self.delta;
        let peak = self.g_peak(t);
        let term = |t: &mut Tables, i: i64| {
            self.g_at(t, i) - tilt * i as f64 * delta + self.g_at(t, i + k)
        };
        // Right of the peak of G both factors are finite; the previous maximizer is usually closer.
        let fallback = peak.max(peak - k);
        let start = match if numerator { t.hint_num } else { t.hint_den } {
            Some(h) if term(t, h) > f64::NEG_INFINITY => h,
            _ => fallback,
        };
        let (val, best) = walk_sum(|i| term(t, i), start);
        let val = val + delta.ln();
        if numerator {
            t.hint_num = Some(best);
            t.rho_num.set(k, val);
        } else {
            t.hint_den = Some(best);
            t.rho_den.set(k, val);
        }
        val
    }

    /// `log ρ` at an arbitrary `s` by Lagrange interpolation on the grid.
    fn rho_interp(&self, t: &mut Tables, s: f64, numerator: bool) -> f64 {
        let pos = s / self.delta;
        let base = pos.floor() as i64 - (INTERP_POINTS / 2 - 1);
        let nodes: Vec<(f64, f64)> = (0..INTERP_POINTS)
            .map(|q| {
                let k = base + q;
                (k as f64, self.rho_at(t, k, numerator))
            })
            .collect();
        let mut acc = 0.0;
        for (a, &(xa, ya)) in nodes.iter().enumerate() {
            let mut w = 1.0;
            for (b, &(xb, _)) in nodes.iter().enumerate() {
                if a != b {
                    w *= (pos - xb) / (xa - xb);
                }
            }
            acc += w * ya;
        }
        acc
    }

    /// `log I(A, β; θ')`.
    fn log_outer(&self, t: &mut Tables, a: f64, beta: f64, numerator: bool) -> f64 {
        let (delta, kappa) = (self.delta, self.kappa);
        let psi = |s: f64| a * (s + kappa) - beta * softplus(s + kappa);
        let start = if a > 0.0 {
            (((a / (beta - a)).ln() - kappa) / delta).round() as i64
        } else {
            self.g_peak(t)
        };
        let width = if a > 0.0 { (1.0 / a + 1.0 / (beta - a)).sqrt() } else { f64::INFINITY };
        let (coarse_sum, best) = walk_sum(|k| self.rho_at(t, k, numerator) + psi(k as f64 * delta), start);
        if width >= 2.0 * delta {
            return coarse_sum;
        }
        let h = width / 4.0;
        let center = best as f64 * delta;
        let (v, _) = walk_sum(
            |q| {
                let s = center + q as f64 * h;
                self.rho_interp(t, s, numerator) - delta.ln() + psi(s)
            },
            0,
        );
        v + h.ln()
    }

    /// Log posterior weights `log Pr[f = l | C = c]` for `l = 0..=min(c, l_max)`.
    /// Over the full support they sum to one up to discretization error.
    pub fn log_posterior_weights(&self, c: u64, l_max: u64) -> Result<Vec<f64>> {
        if c > self.m {
            return invalid(format!("hashed count {c} exceeds stream length {}", self.m));
        }
        let PypParams { alpha, theta } = self.params;
        let m = self.m as f64;
        let a = (self.m - c) as f64;
        let mut t = self.tables.lock().unwrap_or_else(|e| e.into_inner());
        let log_den = self.log_outer(&mut t, a, theta + m + 1.0, false);
        let head = alpha.ln() - ln_gamma(theta + m + 1.0) - log_den;
        let top = c.min(l_max);
        let mut out = Vec::with_capacity(top as usize + 1);
        let ln_fact_c = ln_gamma(c as f64 + 1.0);
        for l in 0..=top {
            let lf = l as f64;
            let log_num = self.log_outer(&mut t, a, theta + m - lf + alpha, true);
            let binom = ln_fact_c - ln_gamma(lf + 1.0) - ln_gamma((c - l) as f64 + 1.0);
            let w = head + binom + ln_gamma(theta + alpha + m - lf) + ln_rising(1.0 - alpha, l as usize) + log_num;
            if w.is_nan() {
                return Err(Error::Numeric(format!("stable integral produced NaN at c={c}, l={l}")));
            }
            out.push(w);
        }
        Ok(out)
    }
}
