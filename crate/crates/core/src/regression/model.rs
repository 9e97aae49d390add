use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::links::LinkKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Mode-parameterized beta.
    BetaMode,
    /// Generalized biparabolic, parameterized by its mode.
    GbpMode,
    /// Mean-parameterized beta (comparison model).
    BetaMean,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::BetaMode, Family::GbpMode, Family::BetaMean];

    pub fn name(self) -> &'static str {
        match self {
            Family::BetaMode => "beta_mode",
            Family::GbpMode => "gbp_mode",
            Family::BetaMean => "beta_mean",
        }
    }

    /// Whether the link targets the conditional mode.
    pub fn is_mode_family(self) -> bool {
        !matches!(self, Family::BetaMean)
    }

    /// Smooth likelihood (everywhere twice differentiable in the parameters).
    pub fn is_smooth(self) -> bool {
        !matches!(self, Family::GbpMode)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "beta_mode" | "beta" => Ok(Family::BetaMode),
            "gbp_mode" | "gbp" => Ok(Family::GbpMode),
            "beta_mean" => Ok(Family::BetaMean),
            other => Err(Error::Unsupported(format!(
                "unknown family '{other}'; expected beta_mode, gbp_mode or beta_mean"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub link: LinkKind,
    /// Squeeze boundary responses into `(0,1)` instead of rejecting them.
    #[serde(default)]
    pub squeeze: bool,
}

impl ModelSpec {
    pub fn new(family: Family, link: LinkKind) -> Self {
        Self {
            family,
            link,
            squeeze: false,
        }
    }
}

/// Regression coefficients `(β₀, β₁, …, β_p)` and the log of the scale
/// parameter (`log m` for mode families, `log φ` for `beta_mean`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub beta: Vec<f64>,
    pub log_scale: f64,
}

impl Params {
    pub fn new(beta: Vec<f64>, log_scale: f64) -> Self {
        Self { beta, log_scale }
    }

    /// `m` or `φ`.
    pub fn scale(&self) -> f64 {
        self.log_scale.exp()
    }

    /// `(β, log scale)` as one vector.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.beta.clone();
        v.push(self.log_scale);
        v
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        match v.split_last() {
            Some((&log_scale, beta)) if !beta.is_empty() => Ok(Self {
                beta: beta.to_vec(),
                log_scale,
            }),
            _ => Err(Error::DimensionMismatch {
                expected: 2,
                got: v.len(),
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.beta.len() + 1
    }

    /// `β₀ + Σ βⱼ xⱼ`.
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        linear_predictor(&self.beta, row)
    }
}

#[inline]
pub(crate) fn linear_predictor(beta: &[f64], row: &[f64]) -> f64 {
    beta[0] + beta[1..].iter().zip(row).map(|(b, x)| b * x).sum::<f64>()
}
