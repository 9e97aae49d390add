//! Link functions.
//!
//! Here a "link" `g` maps the linear predictor `η ∈ ℝ` to the mode (or mean)
//! in `(0,1)`; in GLM terms this is the inverse link. Outputs of [`apply`]
//! are clamped to `[LINK_EPSILON, 1 − LINK_EPSILON]` so that likelihoods
//! stay finite at extreme predictors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::special::{std_normal_cdf, std_normal_pdf, std_normal_quantile};

/// Clamp applied to link outputs.
pub const LINK_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Logit,
    Probit,
    Loglog,
    Cloglog,
}

impl LinkKind {
    pub const ALL: [LinkKind; 4] = [LinkKind::Logit, LinkKind::Probit, LinkKind::Loglog, LinkKind::Cloglog];

    pub fn name(self) -> &'static str {
        match self {
            LinkKind::Logit => "logit",
            LinkKind::Probit => "probit",
            LinkKind::Loglog => "loglog",
            LinkKind::Cloglog => "cloglog",
        }
    }

    pub fn apply(self, eta: f64) -> f64 {
        apply(self, eta)
    }

    pub fn invert(self, p: f64) -> Result<f64> {
        invert(self, p)
    }

    pub fn derivative(self, eta: f64) -> f64 {
        derivative(self, eta)
    }
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logit" => Ok(LinkKind::Logit),
            "probit" => Ok(LinkKind::Probit),
            "loglog" | "log-log" => Ok(LinkKind::Loglog),
            "cloglog" | "complementary-log-log" => Ok(LinkKind::Cloglog),
            other => Err(Error::Unsupported(format!(
                "unknown link '{other}'; expected logit, probit, loglog or cloglog"
            ))),
        }
    }
}

/// Unclamped `g(η)`.
fn raw(kind: LinkKind, eta: f64) -> f64 {
    match kind {
        LinkKind::Logit => {
            if eta >= 0.0 {
                1.0 / (1.0 + (-eta).exp())
            } else {
                let e = eta.exp();
                e / (1.0 + e)
            }
        }
        LinkKind::Probit => std_normal_cdf(eta),
        LinkKind::Loglog => (-(-eta).exp()).exp(),
        LinkKind::Cloglog => -(-eta.exp()).exp_m1(),
    }
}

/// `g(η)`, clamped to `[ε, 1−ε]`. A NaN predictor yields NaN.
pub fn apply(kind: LinkKind, eta: f64) -> f64 {
    if eta.is_nan() {
        return f64::NAN;
    }
    raw(kind, eta).clamp(LINK_EPSILON, 1.0 - LINK_EPSILON)
}

/// `g⁻¹(p)` for `p ∈ (0,1)`.
pub fn invert(kind: LinkKind, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("link inverse requires p in (0,1), got {p}"));
    }
    Ok(match kind {
        LinkKind::Logit => (p / (1.0 - p)).ln(),
        LinkKind::Probit => std_normal_quantile(p)?,
        LinkKind::Loglog => -(-p.ln()).ln(),
        LinkKind::Cloglog => (-(-p).ln_1p()).ln(),
    })
}

/// `g'(η) > 0` of the unclamped link.
pub fn derivative(kind: LinkKind, eta: f64) -> f64 {
    match kind {
        LinkKind::Logit => {
            let p = raw(kind, eta);
            p * (1.0 - p)
        }
        LinkKind::Probit => std_normal_pdf(eta),
        LinkKind::Loglog => (-eta - (-eta).exp()).exp(),
        LinkKind::Cloglog => (eta - eta.exp()).exp(),
    }
}
