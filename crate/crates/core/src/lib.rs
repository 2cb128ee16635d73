//! Count-min sketches with Bayesian nonparametric frequency posteriors.
//!
//! The crate covers the whole pipeline: pairwise-independent hashing, the
//! counter matrix with the classic CMS and CMM estimators, posteriors for a
//! token's frequency under Dirichlet-process and Pitman–Yor priors, 2-range
//! queries under the Dirichlet process, likelihood-free fitting of the prior
//! by minimum Wasserstein distance, and a binned-MAE benchmark harness.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod data;
pub mod error;
pub mod fit;
pub mod hashing;
pub mod models;
pub mod pmf;
pub mod posterior;
pub mod sketch;
pub mod specialfn;

pub use error::{Error, Result};
