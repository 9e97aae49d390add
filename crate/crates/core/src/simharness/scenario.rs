use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{BetaModeDist, BoundedDistribution, GbpDist};
use crate::error::{domain, Error, Result};
use crate::links::{apply, LinkKind, LINK_EPSILON};
use crate::numerics::rng::{sample_bernoulli, sample_normal, RngStream};
use crate::numerics::special::std_normal_cdf;
use crate::regression::{Dataset, Family};

/// Data-generating scenarios. `B*` use covariates suited to a beta-mode
/// analysis, `G*` to a GBP-mode analysis; `1` is the matched model, `2`
/// adds a quadratic term, `3` swaps the link for a probit mixture, `4`
/// swaps the response family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioId {
    B1,
    B2,
    B3,
    B4,
    G1,
    G2,
    G3,
    G4,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 8] = [
        ScenarioId::B1,
        ScenarioId::B2,
        ScenarioId::B3,
        ScenarioId::B4,
        ScenarioId::G1,
        ScenarioId::G2,
        ScenarioId::G3,
        ScenarioId::G4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::B1 => "B1",
            ScenarioId::B2 => "B2",
            ScenarioId::B3 => "B3",
            ScenarioId::B4 => "B4",
            ScenarioId::G1 => "G1",
            ScenarioId::G2 => "G2",
            ScenarioId::G3 => "G3",
            ScenarioId::G4 => "G4",
        }
    }

    fn is_beta_series(self) -> bool {
        matches!(self, ScenarioId::B1 | ScenarioId::B2 | ScenarioId::B3 | ScenarioId::B4)
    }

    fn variant(self) -> u8 {
        match self {
            ScenarioId::B1 | ScenarioId::G1 => 1,
            ScenarioId::B2 | ScenarioId::G2 => 2,
            ScenarioId::B3 | ScenarioId::G3 => 3,
            ScenarioId::B4 | ScenarioId::G4 => 4,
        }
    }

    /// Family the series is analysed with.
    pub fn assumed_family(self) -> Family {
        if self.is_beta_series() {
            Family::BetaMode
        } else {
            Family::GbpMode
        }
    }

    /// Family the responses are drawn from.
    pub fn true_family(self) -> Family {
        match (self.is_beta_series(), self.variant() == 4) {
            (true, false) | (false, true) => Family::BetaMode,
            _ => Family::GbpMode,
        }
    }

    /// Shape used for this scenario in the simulation study: 80 for beta
    /// responses in the beta series (10 for GBP responses), and the reverse
    /// for the GBP series.
    pub fn default_m(self) -> f64 {
        match self {
            ScenarioId::B1 | ScenarioId::B2 | ScenarioId::B3 | ScenarioId::G4 => 80.0,
            _ => 10.0,
        }
    }

    /// Linear predictor `1 + X₁ + X₂`, or `1 + X₁ + X₁² + X₂` for variant 2.
    pub fn eta(self, x1: f64, x2: f64) -> f64 {
        let base = 1.0 + x1 + x2;
        if self.variant() == 2 {
            base + x1 * x1
        } else {
            base
        }
    }

    /// True conditional mode at `(x1, x2)`, kept inside `[ε, 1−ε]`.
    pub fn theta(self, x1: f64, x2: f64) -> f64 {
        let eta = self.eta(x1, x2);
        if self.variant() == 3 {
            probit_mixture(eta).clamp(LINK_EPSILON, 1.0 - LINK_EPSILON)
        } else {
            apply(LinkKind::Logit, eta)
        }
    }
}

/// `0.5 Φ(2(η+2)) + 0.5 Φ(2(η−2))`.
pub fn probit_mixture(eta: f64) -> f64 {
    0.5 * std_normal_cdf(2.0 * (eta + 2.0)) + 0.5 * std_normal_cdf(2.0 * (eta - 2.0))
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::Unsupported(format!("unknown scenario '{s}'; expected one of B1..B4, G1..G4"))
            })
    }
}

/// A generated dataset with the true mode of every observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub data: Dataset,
    pub theta: Vec<f64>,
}

/// Covariates `(X₁, X₂)` for one unit.
pub fn draw_covariates<R: rand::Rng + ?Sized>(scenario: ScenarioId, rng: &mut R) -> (f64, f64) {
    if scenario.is_beta_series() {
        let x2 = f64::from(sample_bernoulli(rng, 0.5).expect("valid p"));
        let x1 = sample_normal(rng, if x2 == 1.0 { 1.0 } else { -1.0 }, 1.0).expect("valid sd");
        (x1, x2)
    } else {
        let x1 = sample_normal(rng, 0.0, 1.0).expect("valid sd");
        let x2 = f64::from(sample_bernoulli(rng, 0.5).expect("valid p"));
        (x1, x2)
    }
}

/// One response from the scenario's conditional law at mode `theta`.
pub fn draw_response<R: rand::Rng + ?Sized>(scenario: ScenarioId, theta: f64, m: f64, rng: &mut R) -> Result<f64> {
    Ok(match scenario.true_family() {
        Family::GbpMode => GbpDist::new(theta, m)?.draw(rng),
        _ => BetaModeDist::new(theta, m)?.draw(rng),
    })
}

/// `n` units from `scenario` with shape `m`, reproducible per stream.
pub fn generate(scenario: ScenarioId, n: usize, m: f64, stream: RngStream) -> Result<SimulatedData> {
    if n < 4 {
        return domain(format!("need n >= 4 to fit three coefficients and a scale, got {n}"));
    }
    if !(m > 0.0 && m.is_finite()) {
        return domain(format!("m must be finite and > 0, got {m}"));
    }
    let mut rng = stream.generator();
    let mut y = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    for _ in 0..n {
        let (x1, x2) = draw_covariates(scenario, &mut rng);
        let t = scenario.theta(x1, x2);
        y.push(draw_response(scenario, t, m, &mut rng)?);
        rows.push(vec![x1, x2]);
        theta.push(t);
    }
    let data = Dataset::new(y, rows, vec!["x1".into(), "x2".into()])?;
    Ok(SimulatedData { data, theta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse() {
        for id in ScenarioId::ALL {
            assert_eq!(id.name().parse::<ScenarioId>().unwrap(), id);
        }
        assert_eq!("g3".parse::<ScenarioId>().unwrap(), ScenarioId::G3);
        assert!("B5".parse::<ScenarioId>().is_err());
    }

    #[test]
    fn families_cross_over_in_variant_four() {
        assert_eq!(ScenarioId::B4.true_family(), Family::GbpMode);
        assert_eq!(ScenarioId::G4.true_family(), Family::BetaMode);
        assert_eq!(ScenarioId::B2.true_family(), Family::BetaMode);
        assert_eq!(ScenarioId::G3.assumed_family(), Family::GbpMode);
    }

    #[test]
    fn mixture_is_symmetric_at_zero() {
        assert!((probit_mixture(0.0) - 0.5).abs() < 1e-15);
        assert!(probit_mixture(50.0) <= 1.0);
        assert!(ScenarioId::B3.theta(60.0, 1.0) < 1.0);
    }

    #[test]
    fn generation_is_reproducible() {
        let s = RngStream::new(9, 4);
        let a = generate(ScenarioId::B3, 60, 80.0, s).unwrap();
        let b = generate(ScenarioId::B3, 60, 80.0, s).unwrap();
        assert_eq!(a, b);
        assert!(a.theta.iter().all(|t| *t > 0.0 && *t < 1.0));
        assert!(a.data.y().iter().all(|y| *y > 0.0 && *y < 1.0));
        assert!(generate(ScenarioId::B1, 3, 80.0, s).is_err());
    }
}
