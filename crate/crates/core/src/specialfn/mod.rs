//! Log-space special functions: rising factorials, generalized factorial
//! coefficients, Stirling numbers, the law of the number of distinct symbols,
//! the positive stable density, and tanh-sinh quadrature.

mod combinatorics;
mod logvalue;
mod quadrature;
mod stable;

pub use combinatorics::{
    gfc_table, km_pgf_log, km_pmf, log_pgf_distinct, stirling1_signless, GfcTable, Stirling1Table,
};
pub use logvalue::{log_sum_exp, LogValue};
pub use quadrature::{log_integral, log_integral_signed, tanh_sinh_rule, Domain, Node, QuadratureRule};
pub use stable::{stable_logpdf, StableDensity};

use crate::error::{invalid, Result};

const DIRECT_PRODUCT_MAX: usize = 24;

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `log (a)_(n)` for `a > 0`, where `(a)_(n) = a(a+1)···(a+n−1)`.
pub fn log_rising(a: f64, n: usize) -> Result<LogValue> {
    if a.is_nan() || a <= 0.0 {
        return invalid(format!("rising factorial base must be positive, got {a}"));
    }
    Ok(LogValue::from_log(ln_rising(a, n)))
}

/// Unchecked `log (a)_(n)` for `a > 0`.
#[inline]
pub fn ln_rising(a: f64, n: usize) -> f64 {
    if n <= DIRECT_PRODUCT_MAX {
        (0..n).map(|i| (a + i as f64).ln()).sum()
    } else {
        ln_gamma(a + n as f64) - ln_gamma(a)
    }
}

/// `(x)_(n)` for any real `x`, as a signed log value. Vanishes when a factor hits zero.
pub fn rising_signed(x: f64, n: usize) -> LogValue {
    if n == 0 {
        return LogValue::ONE;
    }
    if x > 0.0 {
        return LogValue::from_log(ln_rising(x, n));
    }
    if x == x.floor() && -x < n as f64 {
        return LogValue::ZERO;
    }
    let negative_factors = (0..n).take_while(|&i| x + (i as f64) < 0.0).count();
    let sign = if negative_factors % 2 == 0 { 1 } else { -1 };
    if n <= DIRECT_PRODUCT_MAX {
        let l = (0..n).map(|i| (x + i as f64).abs().ln()).sum();
        return LogValue::new(sign, l);
    }
    let (lg_hi, _) = libm::lgamma_r(x + n as f64);
    let (lg_lo, _) = libm::lgamma_r(x);
    LogValue::new(sign, lg_hi - lg_lo)
}

#[inline]
pub fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

#[inline]
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rising_factorial_values() {
        assert!((log_rising(1.0, 3).unwrap().ln() - 6f64.ln()).abs() < 1e-15);
        assert_eq!(log_rising(4.2, 0).unwrap(), LogValue::ONE);
        assert!((log_rising(0.5, 2).unwrap().ln() - 0.75f64.ln()).abs() < 1e-15);
        assert!(log_rising(0.0, 2).is_err());
        assert!(log_rising(-1.0, 2).is_err());
        // lgamma branch agrees with the direct product
        let direct: f64 = (0..40).map(|i| (2.5 + i as f64).ln()).sum();
        assert!((ln_rising(2.5, 40) - direct).abs() < 1e-11 * direct);
    }

    #[test]
    fn signed_rising_factorial() {
        assert!((rising_signed(-0.5, 3).to_f64() - (-0.5 * 0.5 * 1.5)).abs() < 1e-15);
        assert!(rising_signed(-2.0, 3).is_zero());
        assert_eq!(rising_signed(-2.0, 2).to_f64(), 2.0);
        assert!(rising_signed(0.0, 1).is_zero());
        assert_eq!(rising_signed(0.0, 0), LogValue::ONE);
        let want: f64 = (0..30).map(|i| -0.3 + i as f64).product();
        let got = rising_signed(-0.3, 30).to_f64();
        assert!((got / want - 1.0).abs() < 1e-12);
    }
}
