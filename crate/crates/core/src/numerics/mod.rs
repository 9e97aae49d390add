//! Numerical building blocks shared by every other module.

pub mod diff;
pub mod optimize;
pub mod quadrature;
pub mod rng;
pub mod special;

pub use diff::{
    finite_diff_gradient, finite_diff_hessian, finite_diff_jacobian, one_sided_derivative,
    one_sided_second_derivative, Side,
};
pub use optimize::{minimize, polish_quasi_newton, Minimum, OptimizerOptions};
pub use quadrature::integrate;
pub use rng::{sample_bernoulli, sample_gamma, sample_normal, sample_uniform, RngStream, StreamRng};
pub use special::{
    digamma, log_gamma, regularized_incomplete_beta, std_normal_cdf, std_normal_pdf,
    std_normal_quantile,
};
