//! Density of the positive α-stable law with Laplace transform `exp(−t^α)`.
//!
//! Moderate arguments use Kanter's angular representation
//! `g(x) = α/((1−α)π) · x^{−1/(1−α)} ∫_0^π A(φ) exp(−x^{−α/(1−α)} A(φ)) dφ`,
//! `A(φ) = (sin αφ / sin φ)^{1/(1−α)} · sin((1−α)φ) / sin αφ`,
//! integrated by tanh-sinh in log space. Far in the right tail the
//! convergent power series in `x^{−α}` is cheaper and more accurate.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, OnceLock};

use super::ln_gamma;
use super::logvalue::log_sum_exp;
use super::quadrature::{tanh_sinh_rule, QuadratureRule};
use crate::error::{invalid, Result};

pub const DEFAULT_LEVEL: u32 = 10;
const MAX_LEVEL: u32 = 16;

/// Switch to the tail series once `x^{−α}` drops below this.
const SERIES_CUTOFF: f64 = 0.05;
const SERIES_TERMS: usize = 80;

/// The angular integrand sharpens like `(π − φ)^{−1/(1−α)}`, so the rule is
/// refined one level per doubling of `1/(1−α)` beyond 2.
pub fn level_for(alpha: f64) -> u32 {
    let b = 1.0 / (1.0 - alpha);
    let extra = (b / 2.0).log2().ceil().max(0.0) as u32;
    (DEFAULT_LEVEL + extra).min(MAX_LEVEL)
}

fn shared_rule(level: u32) -> Arc<QuadratureRule> {
    static RULES: OnceLock<Vec<OnceLock<Arc<QuadratureRule>>>> = OnceLock::new();
    let slots = RULES.get_or_init(|| (0..=MAX_LEVEL).map(|_| OnceLock::new()).collect());
    slots[level as usize]
        .get_or_init(|| Arc::new(tanh_sinh_rule(level)))
        .clone()
}

/// Evaluator for `log g_α` bound to one α and one quadrature rule.
#[derive(Debug, Clone)]
pub struct StableDensity {
    alpha: f64,
    rule: Arc<QuadratureRule>,
    /// Per-node `(log(π/2) + log weight, log A(φ))`.
    nodes: Vec<(f64, f64)>,
}

impl StableDensity {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return invalid(format!("stable index must lie in (0,1), got {alpha}"));
        }
        Self::with_rule(alpha, shared_rule(level_for(alpha)))
    }

    pub fn with_rule(alpha: f64, rule: Arc<QuadratureRule>) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return invalid(format!("stable index must lie in (0,1), got {alpha}"));
        }
        let b = 1.0 / (1.0 - alpha);
        let nodes = rule
            .nodes
            .iter()
            .map(|n| {
                let gap = FRAC_PI_2 * n.comp;
                let (phi, sin_phi) = if n.x < 0.0 { (gap, gap.sin()) } else { (PI - gap, gap.sin()) };
                let log_a = alpha * b * (alpha * phi).sin().ln() - b * sin_phi.ln()
                    + ((1.0 - alpha) * phi).sin().ln();
                (FRAC_PI_2.ln() + n.log_weight, log_a)
            })
            .collect();
        Ok(StableDensity { alpha, rule, nodes })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// `log g_α(x)` for `x > 0`; `-inf` where the density underflows completely.
    pub fn logpdf(&self, x: f64) -> f64 {
        let a = self.alpha;
        let ln_x = x.ln();
        if -a * ln_x < SERIES_CUTOFF.ln() {
            self.tail_series(ln_x)
        } else {
            self.angular(ln_x)
        }
    }

    fn angular(&self, ln_x: f64) -> f64 {
        let a = self.alpha;
        let b = 1.0 / (1.0 - a);
        let log_k = -a * b * ln_x;
        let mut terms = Vec::with_capacity(self.nodes.len());
        terms.extend(
            self.nodes
                .iter()
                .map(|&(lw, log_a)| lw + log_a - (log_k + log_a).exp()),
        );
        (a / ((1.0 - a) * PI)).ln() - b * ln_x + log_sum_exp(&terms)
    }

    /// `g(x) = (1/π) Σ_k (−1)^{k+1} Γ(kα+1)/k! · sin(kπα) · x^{−kα−1}`.
    fn tail_series(&self, ln_x: f64) -> f64 {
        let a = self.alpha;
        let mut total = 0.0;
        for k in 1..=SERIES_TERMS {
            let kf = k as f64;
            let mag = (ln_gamma(kf * a + 1.0) - ln_gamma(kf + 1.0) - (kf - 1.0) * a * ln_x).exp();
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let term = sign * mag * (kf * PI * a).sin();
            total += term;
            if mag < 1e-18 * total.abs() {
                break;
            }
        }
        total.ln() - PI.ln() - (a + 1.0) * ln_x
    }
}

/// `log g_α(x)` with the rule chosen by [`level_for`].
pub fn stable_logpdf(alpha: f64, x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return invalid(format!("stable density needs x > 0, got {x}"));
    }
    Ok(StableDensity::new(alpha)?.logpdf(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specialfn::{log_integral, Domain};

    fn levy_logpdf(x: f64) -> f64 {
        -(2.0 * PI.sqrt()).ln() - 1.5 * x.ln() - 1.0 / (4.0 * x)
    }

    #[test]
    fn levy_at_one() {
        let v = stable_logpdf(0.5, 1.0).unwrap();
        assert!((v.exp() - 0.219695644733861).abs() < 1e-12);
    }

    #[test]
    fn matches_levy_closed_form() {
        let d = StableDensity::new(0.5).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..=400 {
            let x = 0.05 * (400f64).powf(i as f64 / 400.0);
            worst = worst.max((d.logpdf(x) - levy_logpdf(x)).abs());
        }
        assert!(worst <= 1e-12, "max error {worst}");
        // far left and far right tails, including the series branch
        for x in [1e-3, 1e-2, 1e3, 1e5, 1e8] {
            let err = (d.logpdf(x) - levy_logpdf(x)).abs();
            assert!(err < 1e-10 * levy_logpdf(x).abs().max(1.0), "x={x} err={err}");
        }
    }

    #[test]
    fn laplace_identity() {
        let rule = tanh_sinh_rule(12);
        for alpha in [0.05, 0.2, 0.5, 0.8, 0.95] {
            let d = StableDensity::new(alpha).unwrap();
            for t in [0.5, 1.0, 2.0] {
                let v = log_integral(|x| -t * x + d.logpdf(x), &rule, Domain::Above(0.0)).to_f64();
                let want = (-f64::powf(t, alpha)).exp();
                assert!((v - want).abs() < 1e-8, "α={alpha} t={t}: {v} vs {want}");
            }
        }
    }

    #[test]
    fn series_and_angular_integral_agree_at_the_switch() {
        for alpha in [0.1, 0.3, 0.6, 0.9, 0.95] {
            let d = StableDensity::new(alpha).unwrap();
            for small in [0.1, SERIES_CUTOFF, 0.01] {
                let ln_x = -small.ln() / alpha;
                let diff = d.angular(ln_x) - d.tail_series(ln_x);
                assert!(diff.abs() < 1e-11, "α={alpha} x^-α={small}: {diff}");
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(stable_logpdf(0.0, 1.0).is_err());
        assert!(stable_logpdf(1.0, 1.0).is_err());
        assert!(stable_logpdf(0.5, 0.0).is_err());
    }
}
