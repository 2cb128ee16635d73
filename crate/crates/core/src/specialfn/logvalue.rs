use std::cmp::Ordering;
use std::ops::{Div, Mul, Neg};

/// A real number stored as `sign · exp(log_abs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    pub log_abs: f64,
    pub sign: i8,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { log_abs: f64::NEG_INFINITY, sign: 0 };
    pub const ONE: LogValue = LogValue { log_abs: 0.0, sign: 1 };

    /// A positive value given by its logarithm; `-inf` maps to zero.
    pub fn from_log(log_abs: f64) -> Self {
        if log_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogValue { log_abs, sign: 1 }
        }
    }

    pub fn new(sign: i8, log_abs: f64) -> Self {
        if sign == 0 || log_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogValue { log_abs, sign: sign.signum() }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        match x.partial_cmp(&0.0) {
            Some(Ordering::Greater) => LogValue { log_abs: x.ln(), sign: 1 },
            Some(Ordering::Less) => LogValue { log_abs: (-x).ln(), sign: -1 },
            _ => Self::ZERO,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn to_f64(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => s as f64 * self.log_abs.exp(),
        }
    }

    /// The natural log of a positive value; `-inf` for zero and NaN for negatives.
    pub fn ln(self) -> f64 {
        match self.sign {
            1 => self.log_abs,
            0 => f64::NEG_INFINITY,
            _ => f64::NAN,
        }
    }

    pub fn powi(self, k: i32) -> Self {
        if k == 0 {
            return Self::ONE;
        }
        if self.sign == 0 {
            return Self::ZERO;
        }
        let sign = if self.sign < 0 && k % 2 != 0 { -1 } else { 1 };
        LogValue { log_abs: self.log_abs * k as f64, sign }
    }

    /// Signed addition without leaving log space.
    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: LogValue) -> LogValue {
        if self.sign == 0 {
            return other;
        }
        if other.sign == 0 {
            return self;
        }
        let (big, small) = if self.log_abs >= other.log_abs { (self, other) } else { (other, self) };
        let d = small.log_abs - big.log_abs;
        if big.sign == small.sign {
            LogValue { log_abs: big.log_abs + d.exp().ln_1p(), sign: big.sign }
        } else if d == 0.0 {
            Self::ZERO
        } else {
            LogValue { log_abs: big.log_abs + (-d.exp()).ln_1p(), sign: big.sign }
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, other: LogValue) -> LogValue {
        self.add(-other)
    }

    pub fn sum<I: IntoIterator<Item = LogValue>>(iter: I) -> LogValue {
        let items: Vec<LogValue> = iter.into_iter().filter(|v| v.sign != 0).collect();
        let Some(max) = items.iter().map(|v| v.log_abs).reduce(f64::max) else {
            return Self::ZERO;
        };
        if max == f64::INFINITY {
            return LogValue { log_abs: max, sign: 1 };
        }
        let total: f64 = items.iter().map(|v| v.sign as f64 * (v.log_abs - max).exp()).sum();
        LogValue::from_f64(total).mul(LogValue::from_log(max))
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        if self.sign == 0 || rhs.sign == 0 {
            Self::ZERO
        } else {
            LogValue { log_abs: self.log_abs + rhs.log_abs, sign: self.sign * rhs.sign }
        }
    }
}

impl Div for LogValue {
    type Output = LogValue;
    fn div(self, rhs: LogValue) -> LogValue {
        assert!(rhs.sign != 0, "division of LogValue by zero");
        if self.sign == 0 {
            Self::ZERO
        } else {
            LogValue { log_abs: self.log_abs - rhs.log_abs, sign: self.sign * rhs.sign }
        }
    }
}

impl Neg for LogValue {
    type Output = LogValue;
    fn neg(self) -> LogValue {
        LogValue { log_abs: self.log_abs, sign: -self.sign }
    }
}

/// `log Σ exp(xs)`, returning `-inf` for an empty or all-`-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_matches_f64() {
        let vals = [3.5, -2.0, 0.0, 1e-300, -7.25, 1e300];
        for &a in &vals {
            for &b in &vals {
                let (la, lb) = (LogValue::from_f64(a), LogValue::from_f64(b));
                let sum = la.add(lb).to_f64();
                assert!((sum - (a + b)).abs() <= 1e-13 * (a.abs() + b.abs()), "{a}+{b}");
                let prod = (la * lb).to_f64();
                if (a * b).is_finite() && (a * b) != 0.0 {
                    assert!((prod / (a * b) - 1.0).abs() < 1e-12, "{a}*{b}");
                }
            }
        }
        assert!(LogValue::from_f64(2.0).sub(LogValue::from_f64(2.0)).is_zero());
        assert!((LogValue::from_f64(-2.0).powi(3).to_f64() + 8.0).abs() < 1e-14);
    }

    #[test]
    fn sum_is_shift_stable() {
        let big = LogValue::sum([LogValue::from_log(1000.0), LogValue::from_log(1000.0)]);
        assert!((big.log_abs - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!(LogValue::sum([]).is_zero());
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }
}
