//! Posterior laws of a token's frequency given its hashed counters.

mod dp;
pub mod integral;
mod pyp;
mod range;

pub use dp::{
    dp_log_kernel, dp_posterior_multi, dp_posterior_multi_with, dp_posterior_single,
    fit_theta_empirical_bayes, fit_theta_from_counts, THETA_BRACKET,
};
pub use pyp::{
    pyp_estimate, pyp_marginal_log_pmf, pyp_posterior_alternating, pyp_posterior_exact,
    pyp_posterior_integral, pyp_posterior_multi, EvaluationPath, PypPosteriorContext, EXACT_MAX_M,
};
pub use range::{dp_range2_multi, dp_range2_single, range_sum_posterior, JointPosterior2};

/// How per-hash posteriors are combined across the `N` rows of a sketch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProductForm {
    /// `p(l | c_1..c_N) ∝ ∏_n p(l | c_n)`.
    #[default]
    Proportional,
    /// `p(l | c_1..c_N) ∝ Pr[f = l]^{1−N} ∏_n p(l | c_n)`, which reweights by the prior marginal.
    MarginalCorrected,
}
