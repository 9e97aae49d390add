//! Log-likelihoods written out directly from the closed forms (not via the
//! distribution objects, which serve as an independent oracle in tests).

use super::data::Dataset;
use super::model::{linear_predictor, Family, ModelSpec, Params};
use crate::distributions::gbp_normalizer;
use crate::error::{Error, Result};
use crate::links::apply;
use crate::numerics::special::ln_gamma;

/// Per-observation log-density with the scale-dependent constants hoisted.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Kernel {
    family: Family,
    scale: f64,
    constant: f64,
}

impl Kernel {
    /// `None` when the scale is not a finite positive number.
    pub(crate) fn new(family: Family, log_scale: f64) -> Option<Self> {
        let scale = log_scale.exp();
        if !(scale > 0.0 && scale.is_finite()) {
            return None;
        }
        let constant = match family {
            Family::BetaMode => ln_gamma(2.0 + scale),
            Family::GbpMode => gbp_normalizer(scale).ln(),
            Family::BetaMean => ln_gamma(scale),
        };
        Some(Self {
            family,
            scale,
            constant,
        })
    }

    /// `ln f(y | loc)` given `ln y` and `ln(1−y)`.
    #[inline]
    pub(crate) fn term(&self, loc: f64, y: f64, ln_y: f64, ln_1my: f64) -> f64 {
        let s = self.scale;
        match self.family {
            Family::BetaMode => {
                let a = s * loc;
                let b = s * (1.0 - loc);
                self.constant - ln_gamma(1.0 + a) - ln_gamma(1.0 + b) + a * ln_y + b * ln_1my
            }
            Family::GbpMode => {
                let ln_d = if y <= loc {
                    ln_y - loc.ln()
                } else {
                    ln_1my - (-loc).ln_1p()
                };
                let m_ln_d = s * ln_d;
                self.constant + m_ln_d + (2.0 - m_ln_d.exp()).ln()
            }
            Family::BetaMean => {
                let a = s * loc;
                let b = s * (1.0 - loc);
                self.constant - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * ln_y + (b - 1.0) * ln_1my
            }
        }
    }
}

fn check_dims(params: &Params, data: &Dataset) -> Result<()> {
    if params.beta.len() != data.p() + 1 {
        return Err(Error::DimensionMismatch {
            expected: data.p() + 1,
            got: params.beta.len(),
        });
    }
    Ok(())
}

/// Linked location `g(η)`: the mode for mode families, the mean for `beta_mean`.
pub fn location(spec: &ModelSpec, params: &Params, row: &[f64]) -> f64 {
    apply(spec.link, params.linear_predictor(row))
}

fn fold(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Total log-likelihood. Non-finite predictors or scales give `−∞`.
pub fn log_likelihood(spec: &ModelSpec, params: &Params, data: &Dataset) -> Result<f64> {
    check_dims(params, data)?;
    Ok(log_likelihood_unchecked(spec, &params.beta, params.log_scale, data))
}

pub(crate) fn log_likelihood_unchecked(spec: &ModelSpec, beta: &[f64], log_scale: f64, data: &Dataset) -> f64 {
    let Some(kernel) = Kernel::new(spec.family, log_scale) else {
        return f64::NEG_INFINITY;
    };
    let mut total = 0.0;
    for i in 0..data.n() {
        let eta = linear_predictor(beta, data.row(i));
        if !eta.is_finite() {
            return f64::NEG_INFINITY;
        }
        let loc = apply(spec.link, eta);
        total += kernel.term(loc, data.y()[i], data.log_y(i), data.log_1my(i));
    }
    fold(total)
}

/// Log-likelihood contribution of every observation.
pub fn observation_log_likelihoods(spec: &ModelSpec, params: &Params, data: &Dataset) -> Result<Vec<f64>> {
    check_dims(params, data)?;
    Ok(observation_terms(spec, &params.beta, params.log_scale, data))
}

pub(crate) fn observation_terms(spec: &ModelSpec, beta: &[f64], log_scale: f64, data: &Dataset) -> Vec<f64> {
    let Some(kernel) = Kernel::new(spec.family, log_scale) else {
        return vec![f64::NEG_INFINITY; data.n()];
    };
    (0..data.n())
        .map(|i| {
            let eta = linear_predictor(beta, data.row(i));
            if !eta.is_finite() {
                return f64::NEG_INFINITY;
            }
            let loc = apply(spec.link, eta);
            fold(kernel.term(loc, data.y()[i], data.log_y(i), data.log_1my(i)))
        })
        .collect()
}
