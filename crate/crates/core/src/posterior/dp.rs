use super::ProductForm;
use crate::error::{invalid, Error, Result};
use crate::models::{dm_log_likelihood, dp_marginal_pmf};
use crate::pmf::PosteriorPmf;
use crate::sketch::{HashedRow, SketchMatrix};
use crate::specialfn::ln_rising;

/// Search bracket for the empirical-Bayes concentration.
pub const THETA_BRACKET: (f64, f64) = (1e-3, 1e5);
const LOG_THETA_TOL: f64 = 1e-6;

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0) || !theta.is_finite() {
        return invalid(format!("DP concentration must be positive and finite, got {theta}"));
    }
    Ok(())
}

/// `log p(l | c)` for `l = 0..=c`: `(θ/J)/(θ/J+c) · (c−l+1)_(l) / (θ/J+c−l)_(l)`.
pub fn dp_log_kernel(theta: f64, j: usize, c: u64) -> Vec<f64> {
    let share = theta / j as f64;
    let cf = c as f64;
    let head = share.ln() - (share + cf).ln();
    (0..=c)
        .map(|l| {
            let lf = l as f64;
            head + ln_rising(cf - lf + 1.0, l as usize) - ln_rising(share + cf - lf, l as usize)
        })
        .collect()
}

pub fn dp_posterior_single(theta: f64, j: usize, c: u64) -> Result<PosteriorPmf> {
    check_theta(theta)?;
    if j == 0 {
        return invalid("bucket count must be at least 1");
    }
    if c == 0 {
        return Ok(PosteriorPmf::point_mass(0));
    }
    PosteriorPmf::from_log_weights(dp_log_kernel(theta, j, c))
}

pub fn dp_posterior_multi(theta: f64, j: usize, row: &HashedRow) -> Result<PosteriorPmf> {
    dp_posterior_multi_with(theta, j, row, ProductForm::Proportional, 0)
}

/// Multi-hash posterior; `m` is only read by [`ProductForm::MarginalCorrected`].
pub fn dp_posterior_multi_with(
    theta: f64,
    j: usize,
    row: &HashedRow,
    form: ProductForm,
    m: u64,
) -> Result<PosteriorPmf> {
    check_theta(theta)?;
    if row.values.is_empty() {
        return invalid("hashed row is empty");
    }
    if j == 0 {
        return invalid("bucket count must be at least 1");
    }
    let support = row.min();
    if support == 0 {
        return Ok(PosteriorPmf::point_mass(0));
    }
    let mut acc = vec![0.0; support as usize + 1];
    for &c in &row.values {
        for (a, k) in acc.iter_mut().zip(dp_log_kernel(theta, j, c)) {
            *a += k;
        }
    }
    if form == ProductForm::MarginalCorrected {
        if m < support {
            return invalid(format!("stream length {m} is below the hashed counts"));
        }
        let marginal = dp_marginal_pmf(m as usize, theta)?;
        let power = 1.0 - row.values.len() as f64;
        for (l, a) in acc.iter_mut().enumerate() {
            *a += power * marginal.log_probs()[l];
        }
    }
    PosteriorPmf::from_log_weights(acc)
}

/// Maximizes the Dirichlet-multinomial likelihood of the sketch over `θ`.
pub fn fit_theta_empirical_bayes(sketch: &SketchMatrix) -> Result<f64> {
    if sketch.total() == 0 {
        return invalid("cannot fit θ on an empty sketch");
    }
    fit_theta_from_counts(sketch.counts(), sketch.buckets())
}

/// Golden-section search on `log θ` over [`THETA_BRACKET`].
pub fn fit_theta_from_counts(counts: &[u64], j: usize) -> Result<f64> {
    let objective = |log_theta: f64| -> Result<f64> {
        let v = dm_log_likelihood(counts, j, log_theta.exp())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numeric(format!("non-finite likelihood at θ = {}", log_theta.exp())))
        }
    };
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (THETA_BRACKET.0.ln(), THETA_BRACKET.1.ln());
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = objective(x1)?;
    let mut f2 = objective(x2)?;
    while hi - lo > LOG_THETA_TOL {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = objective(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = objective(x2)?;
        }
    }
    let mid = 0.5 * (lo + hi);
    // The likelihood can be monotone; prefer an endpoint that beats the interior point.
    let candidates = [THETA_BRACKET.0.ln(), mid, THETA_BRACKET.1.ln()];
    let mut best = (mid, objective(mid)?);
    for x in candidates {
        let v = objective(x)?;
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(best.0.exp())
}
