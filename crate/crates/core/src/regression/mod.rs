//! Beta-mode, GBP-mode and beta-mean regressions: data, likelihoods,
//! maximum-likelihood fitting and sandwich covariance.
//!
//! Parameters are optimized on `(β, log scale)`, so the scale stays positive
//! without constraints.

mod data;
mod fit;
mod likelihood;
mod model;

pub use data::{squeeze_transform, Dataset};
pub use fit::{
    conditional_dist, conditional_summary, fit, fit_from, sandwich_cov, simulate_responses, starting_values, summarize,
    ConditionalSummary,
    FitOptions, FitResult, Sandwich, PSD_TOLERANCE,
};
pub use likelihood::{location, log_likelihood, observation_log_likelihoods};
pub use model::{Family, ModelSpec, Params};
