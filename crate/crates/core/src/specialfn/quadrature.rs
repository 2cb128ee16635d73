//! Tanh-sinh (double exponential) quadrature with log-space accumulation.

use std::f64::consts::FRAC_PI_2;

use super::logvalue::{log_sum_exp, LogValue};

/// Largest `π/2·sinh t` kept; the complement `1 − |x|` is then about 1e−300.
const MAX_INNER: f64 = 345.0;

/// One abscissa of the rule on (−1, 1).
///
/// `comp = 1 − |x|` is stored separately so that integrands can resolve
/// behaviour at the endpoints far below the spacing of doubles near ±1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub x: f64,
    pub comp: f64,
    pub log_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub level: u32,
    pub step: f64,
    pub nodes: Vec<Node>,
}

/// Tanh-sinh rule on (−1, 1) with step `2^(4 − level)`; level 10 has about 780 nodes.
pub fn tanh_sinh_rule(level: u32) -> QuadratureRule {
    let level = level.max(1);
    let step = 2f64.powi(4 - level as i32);
    let mut nodes = Vec::new();
    let mut k = 0i64;
    loop {
        let t = k as f64 * step;
        let u = FRAC_PI_2 * t.sinh();
        if u > MAX_INNER {
            break;
        }
        let e = (-2.0 * u).exp();
        let comp = 2.0 * e / (1.0 + e);
        let log_weight = step.ln() + FRAC_PI_2.ln() + t.cosh().ln() + 4f64.ln() - 2.0 * u
            - 2.0 * e.ln_1p();
        let x = 1.0 - comp;
        nodes.push(Node { x, comp, log_weight });
        if k > 0 {
            nodes.push(Node { x: -x, comp, log_weight });
        }
        k += 1;
    }
    nodes.sort_by(|a, b| a.x.total_cmp(&b.x));
    QuadratureRule { level, step, nodes }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// The bounded interval `(a, b)`.
    Finite(f64, f64),
    /// The half line `(a, ∞)`.
    Above(f64),
    /// The whole real line.
    RealLine,
}

impl Domain {
    /// Maps a rule node to `(x, log |dx/dy|)`.
    #[inline]
    fn map(&self, node: &Node) -> (f64, f64) {
        let (y, comp) = (node.x, node.comp);
        match *self {
            Domain::Finite(a, b) => {
                let half = 0.5 * (b - a);
                let x = if y < 0.0 { a + half * comp } else { b - half * comp };
                (x, half.ln())
            }
            Domain::Above(a) => {
                if y > 0.0 {
                    (a + (2.0 - comp) / comp, 2f64.ln() - 2.0 * comp.ln())
                } else {
                    (a + comp / (2.0 - comp), 2f64.ln() - 2.0 * (2.0 - comp).ln())
                }
            }
            Domain::RealLine => {
                let one_minus_sq = comp * (2.0 - comp);
                (y / one_minus_sq, (1.0 + y * y).ln() - 2.0 * one_minus_sq.ln())
            }
        }
    }
}

/// `log ∫ exp(f_log(x)) dx` over `domain`, accumulated with a max-shifted log-sum-exp.
pub fn log_integral<F: FnMut(f64) -> f64>(mut f_log: F, rule: &QuadratureRule, domain: Domain) -> LogValue {
    let terms: Vec<f64> = rule
        .nodes
        .iter()
        .map(|node| {
            let (x, log_jac) = domain.map(node);
            let v = f_log(x);
            if v == f64::NEG_INFINITY {
                v
            } else {
                v + log_jac + node.log_weight
            }
        })
        .collect();
    LogValue::from_log(log_sum_exp(&terms))
}

/// `∫ f(x) dx` for a sign-carrying integrand given in log form.
pub fn log_integral_signed<F: FnMut(f64) -> LogValue>(mut f: F, rule: &QuadratureRule, domain: Domain) -> LogValue {
    LogValue::sum(rule.nodes.iter().map(|node| {
        let (x, log_jac) = domain.map(node);
        f(x) * LogValue::from_log(log_jac + node.log_weight)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_positive_and_symmetric() {
        let rule = tanh_sinh_rule(10);
        assert!(rule.nodes.len() > 400);
        assert!(rule.nodes.iter().all(|n| n.log_weight.is_finite() && n.comp > 0.0));
        let total: f64 = rule.nodes.iter().map(|n| n.log_weight.exp()).sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn basic_integrals() {
        let rule = tanh_sinh_rule(10);
        let one = log_integral(|_| 0.0, &rule, Domain::Finite(0.0, 1.0)).to_f64();
        assert!((one - 1.0).abs() < 1e-12);
        let exp = log_integral(|x| -x, &rule, Domain::Above(0.0)).to_f64();
        assert!((exp - 1.0).abs() < 1e-10);
        let sing = log_integral(|x| -0.5 * x.ln(), &rule, Domain::Finite(0.0, 1.0)).to_f64();
        assert!((sing - 2.0).abs() < 1e-8);
    }

    #[test]
    fn huge_log_offsets_do_not_overflow() {
        let rule = tanh_sinh_rule(10);
        let v = log_integral(|x| 1000.0 - x, &rule, Domain::Above(0.0));
        assert!((v.ln() - 1000.0).abs() < 1e-12);
        assert!(log_integral(|_| f64::NEG_INFINITY, &rule, Domain::Above(0.0)).is_zero());
    }

    #[test]
    fn gaussian_and_nested() {
        let rule = tanh_sinh_rule(10);
        let g = log_integral(|x| -0.5 * x * x, &rule, Domain::RealLine).ln();
        let want = (2.0 * std::f64::consts::PI).sqrt().ln();
        assert!((g - want).abs() < 1e-12);
        let coarse = tanh_sinh_rule(9);
        let double = log_integral(
            |y| log_integral(|x| -0.5 * (x * x + y * y), &coarse, Domain::RealLine).ln(),
            &coarse,
            Domain::RealLine,
        )
        .ln();
        assert!((double - 2.0 * want).abs() < 1e-10, "{double} vs {}", 2.0 * want);
    }

    #[test]
    fn signed_integrand() {
        let rule = tanh_sinh_rule(9);
        let v = log_integral_signed(LogValue::from_f64, &rule, Domain::Finite(-1.0, 2.0)).to_f64();
        assert!((v - 1.5).abs() < 1e-12);
    }
}
