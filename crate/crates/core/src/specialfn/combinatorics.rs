use super::logvalue::LogValue;
use super::rising_signed;
use crate::error::{invalid, Result};
use crate::models::PypParams;

/// Generalized factorial coefficients `𝒞(m, k; α)` for `0 ≤ k ≤ m ≤ m_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct GfcTable {
    alpha: f64,
    rows: Vec<Vec<LogValue>>,
}

/// Fills the table by `𝒞(m+1,k) = (m − kα)𝒞(m,k) + α𝒞(m,k−1)` with `𝒞(0,0) = 1`.
pub fn gfc_table(alpha: f64, m_max: usize) -> Result<GfcTable> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("generalized factorial coefficients need α in (0,1), got {alpha}"));
    }
    let log_alpha = LogValue::from_f64(alpha);
    let mut rows = Vec::with_capacity(m_max + 1);
    rows.push(vec![LogValue::ONE]);
    for m in 0..m_max {
        let prev: &Vec<LogValue> = &rows[m];
        let next = (0..=m + 1)
            .map(|k| {
                let stay = if k <= m {
                    LogValue::from_f64(m as f64 - k as f64 * alpha) * prev[k]
                } else {
                    LogValue::ZERO
                };
                let grow = if k >= 1 { log_alpha * prev[k - 1] } else { LogValue::ZERO };
                stay.add(grow)
            })
            .collect();
        rows.push(next);
    }
    Ok(GfcTable { alpha, rows })
}

impl GfcTable {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn m_max(&self) -> usize {
        self.rows.len() - 1
    }

    /// `𝒞(m, k; α)`; zero outside `0 ≤ k ≤ m`.
    pub fn get(&self, m: usize, k: usize) -> LogValue {
        self.rows
            .get(m)
            .and_then(|r| r.get(k))
            .copied()
            .unwrap_or(LogValue::ZERO)
    }

    fn require(&self, m: usize) -> Result<()> {
        if m > self.m_max() {
            return invalid(format!("table holds m ≤ {}, need {m}", self.m_max()));
        }
        Ok(())
    }
}

/// Signless Stirling numbers of the first kind in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct Stirling1Table {
    rows: Vec<Vec<LogValue>>,
}

impl Stirling1Table {
    pub fn new(m_max: usize) -> Self {
        let mut rows = vec![vec![LogValue::ONE]];
        for m in 0..m_max {
            let prev: &Vec<LogValue> = &rows[m];
            let next = (0..=m + 1)
                .map(|k| {
                    let stay = if k <= m { LogValue::from_f64(m as f64) * prev[k] } else { LogValue::ZERO };
                    let grow = if k >= 1 { prev[k - 1] } else { LogValue::ZERO };
                    stay.add(grow)
                })
                .collect();
            rows.push(next);
        }
        Stirling1Table { rows }
    }

    pub fn get(&self, m: usize, k: usize) -> LogValue {
        self.rows
            .get(m)
            .and_then(|r| r.get(k))
            .copied()
            .unwrap_or(LogValue::ZERO)
    }
}

/// `|s(m, k)|`, the number of permutations of `m` elements with `k` cycles.
pub fn stirling1_signless(m: usize, k: usize) -> Result<LogValue> {
    if k > m {
        return invalid(format!("Stirling number needs k ≤ m, got k={k}, m={m}"));
    }
    Ok(Stirling1Table::new(m).get(m, k))
}

/// `log Σ_k Pr[K_n = k] t^k` for a PYP with discount `alpha` and concentration `theta`.
///
/// `K_0 ≡ 0`, so `n = 0` gives one. `theta` may be negative as long as `theta > −alpha`.
pub fn log_pgf_distinct(t: f64, n: usize, alpha: f64, theta: f64, gfc: &GfcTable) -> Result<LogValue> {
    if n == 0 {
        return Ok(LogValue::ONE);
    }
    gfc.require(n)?;
    let denom = rising_signed(theta, n);
    let log_t = LogValue::from_f64(t);
    Ok(LogValue::sum((1..=n).map(|k| {
        rising_signed(theta / alpha, k) * gfc.get(n, k) * log_t.powi(k as i32) / denom
    })))
}

/// `Pr[K_m = k]` for `k = 0..=m` (the `k = 0` entry is zero for `m ≥ 1`).
pub fn km_pmf(m: usize, params: PypParams, gfc: &GfcTable) -> Result<Vec<f64>> {
    check_pyp(params, gfc)?;
    gfc.require(m)?;
    if m == 0 {
        return Ok(vec![1.0]);
    }
    let denom = rising_signed(params.theta, m);
    Ok((0..=m)
        .map(|k| {
            if k == 0 {
                return 0.0;
            }
            (rising_signed(params.theta / params.alpha, k) * gfc.get(m, k) / denom).to_f64()
        })
        .collect())
}

pub fn km_pgf_log(t: f64, m: usize, params: PypParams, gfc: &GfcTable) -> Result<LogValue> {
    if t.is_nan() || t <= 0.0 {
        return invalid(format!("generating function argument must be positive, got {t}"));
    }
    check_pyp(params, gfc)?;
    log_pgf_distinct(t, m, params.alpha, params.theta, gfc)
}

fn check_pyp(params: PypParams, gfc: &GfcTable) -> Result<()> {
    if params.alpha <= 0.0 {
        return invalid("the law of K_m needs α > 0; use the Stirling-number form for the DP");
    }
    if (params.alpha - gfc.alpha).abs() > 0.0 {
        return invalid("table built for a different α");
    }
    Ok(())
}
