use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{generate, ScenarioId};
use crate::diagnostics::{halfnormal_envelope, bootstrap_score_test, EnvelopeResult, DEFAULT_ENVELOPE_SIMULATIONS};
use crate::error::{domain, Error, Result};
use crate::links::LinkKind;
use crate::numerics::rng::RngStream;
use crate::prediction::loo_coverage;
use crate::regression::{fit, Family, FitOptions, ModelSpec};

/// Replicate `r` of a study draws its data from `RngStream::new(seed, r)`;
/// bootstrap and envelope simulations use substreams of that stream.
const BOOTSTRAP_SUBSTREAM: u64 = 1;
const ENVELOPE_SUBSTREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scenario: ScenarioId,
    pub n: usize,
    /// True shape of the response distribution.
    pub m: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl SimConfig {
    /// 300 replicates at the scenario's default shape.
    pub fn new(scenario: ScenarioId, n: usize, seed: u64) -> Self {
        Self {
            scenario,
            n,
            m: scenario.default_m(),
            replicates: 300,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return domain(format!("n must be at least 10, got {}", self.n));
        }
        if self.replicates == 0 {
            return domain("replicates must be at least 1");
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return domain(format!("m must be finite and > 0, got {}", self.m));
        }
        Ok(())
    }

    fn stream(&self, r: usize) -> RngStream {
        RngStream::new(self.seed, r as u64)
    }
}

fn logit_spec(family: Family) -> ModelSpec {
    ModelSpec::new(family, LinkKind::Logit)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (0 for fewer than two values).
fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Averages of MLEs and sandwich standard deviations over replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleSummary {
    pub config: SimConfig,
    pub family: Family,
    pub parameter_names: Vec<String>,
    pub avg_estimate: Vec<f64>,
    /// Average sandwich standard deviation over replicates that have one.
    pub avg_sd: Vec<f64>,
    pub empirical_sd: Vec<f64>,
    /// Monte Carlo standard error of each average estimate.
    pub mc_se: Vec<f64>,
    /// Replicates included in the averages.
    pub used: usize,
    /// Replicates excluded because the fit failed or did not converge.
    pub failed: usize,
    /// Included replicates without a usable sandwich covariance.
    pub missing_sd: usize,
    #[serde(skip)]
    pub estimates: Vec<Vec<f64>>,
}

/// Fits the scenario's assumed model (logit link) to every replicate.
pub fn run_mle_study(config: &SimConfig) -> Result<MleSummary> {
    config.validate()?;
    let family = config.scenario.assumed_family();
    let spec = logit_spec(family);
    let outcomes: Vec<Option<(Vec<f64>, Option<Vec<f64>>)>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let sim = generate(config.scenario, config.n, config.m, config.stream(r)).ok()?;
            let f = fit(&spec, &sim.data, &FitOptions::default()).ok()?;
            f.converged.then(|| (f.params.to_vec(), f.std_errors))
        })
        .collect();
    let used: Vec<_> = outcomes.iter().flatten().collect();
    if used.is_empty() {
        return Err(Error::NotConverged(format!(
            "no replicate of {} converged",
            config.scenario
        )));
    }
    let dim = used[0].0.len();
    let estimates: Vec<Vec<f64>> = used.iter().map(|(est, _)| est.clone()).collect();
    let sds: Vec<&Vec<f64>> = used.iter().filter_map(|(_, sd)| sd.as_ref()).collect();
    let column = |j: usize| estimates.iter().map(|e| e[j]).collect::<Vec<_>>();
    let avg_estimate = (0..dim).map(|j| mean(&column(j))).collect();
    let empirical_sd: Vec<f64> = (0..dim).map(|j| sample_sd(&column(j))).collect();
    let mc_se = empirical_sd.iter().map(|s| s / (estimates.len() as f64).sqrt()).collect();
    let avg_sd = (0..dim)
        .map(|j| if sds.is_empty() { f64::NAN } else { sds.iter().map(|s| s[j]).sum::<f64>() / sds.len() as f64 })
        .collect();
    let parameter_names = (0..dim - 1).map(|j| format!("beta{j}")).chain(std::iter::once(format!("log_{}", scale_name(family)))).collect();
    Ok(MleSummary {
        config: *config,
        family,
        parameter_names,
        avg_estimate,
        avg_sd,
        empirical_sd,
        mc_se,
        used: estimates.len(),
        failed: config.replicates - estimates.len(),
        missing_sd: estimates.len() - sds.len(),
        estimates,
    })
}

fn scale_name(family: Family) -> &'static str {
    match family {
        Family::BetaMean => "phi",
        _ => "m",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub family: Family,
    pub scenarios: Vec<ScenarioId>,
    pub n_grid: Vec<usize>,
    pub level: f64,
    pub replicates: usize,
    pub b: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCell {
    pub scenario: ScenarioId,
    pub n: usize,
    pub m: f64,
    /// Fraction of completed replicates with bootstrap p-value ≤ level.
    pub rejection_rate: f64,
    pub rejections: usize,
    pub completed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTable {
    pub family: Family,
    pub level: f64,
    pub b: usize,
    pub replicates: usize,
    pub cells: Vec<PowerCell>,
}

impl PowerTable {
    pub fn rate(&self, scenario: ScenarioId, n: usize) -> Option<f64> {
        self.cells.iter().find(|c| c.scenario == scenario && c.n == n).map(|c| c.rejection_rate)
    }
}

/// Bootstrap score-test rejection rates for every scenario and sample size.
/// Responses use each scenario's default shape; the analysis uses `family`
/// with a logit link.
pub fn run_power_study(config: &PowerConfig) -> Result<PowerTable> {
    if !config.family.is_mode_family() {
        return Err(Error::Unsupported("power study needs beta_mode or gbp_mode".into()));
    }
    if !(0.0..=1.0).contains(&config.level) {
        return domain(format!("level must lie in [0,1], got {}", config.level));
    }
    if config.scenarios.is_empty() || config.n_grid.is_empty() {
        return domain("power study needs at least one scenario and one sample size");
    }
    if config.b == 0 {
        return domain("bootstrap count must be at least 1");
    }
    let spec = logit_spec(config.family);
    let mut cells = Vec::new();
    for &scenario in &config.scenarios {
        for &n in &config.n_grid {
            let sim_config = SimConfig {
                scenario,
                n,
                m: scenario.default_m(),
                replicates: config.replicates,
                seed: config.seed,
            };
            sim_config.validate()?;
            let p_values: Vec<Option<f64>> = (0..config.replicates)
                .into_par_iter()
                .map(|r| {
                    let stream = sim_config.stream(r);
                    let sim = generate(scenario, n, sim_config.m, stream).ok()?;
                    bootstrap_score_test(&spec, &sim.data, config.b, stream.substream(BOOTSTRAP_SUBSTREAM))
                        .ok()
                        .map(|t| t.p_value)
                })
                .collect();
            let completed = p_values.iter().flatten().count();
            let rejections = p_values.iter().flatten().filter(|&&p| p <= config.level).count();
            cells.push(PowerCell {
                scenario,
                n,
                m: sim_config.m,
                rejection_rate: if completed == 0 { f64::NAN } else { rejections as f64 / completed as f64 },
                rejections,
                completed,
                failed: config.replicates - completed,
            });
        }
    }
    Ok(PowerTable {
        family: config.family,
        level: config.level,
        b: config.b,
        replicates: config.replicates,
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub scenario: ScenarioId,
    pub m: f64,
    pub n_grid: Vec<usize>,
    pub q_grid: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveragePoint {
    pub n: usize,
    pub q: f64,
    pub coverage_mode: f64,
    pub coverage_mean: f64,
    /// Monte Carlo standard error of `coverage_mode`.
    pub coverage_mode_se: f64,
    pub width_mode: f64,
    pub width_mean: f64,
    /// Average over replicates of the mean/mode width ratio.
    pub width_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCurves {
    pub scenario: ScenarioId,
    pub family: Family,
    pub m: f64,
    pub replicates: usize,
    pub failed: Vec<usize>,
    pub points: Vec<CoveragePoint>,
}

/// Leave-one-out coverage curves of mode and mean intervals, averaged over
/// replicates, for each sample size.
pub fn run_coverage_study(config: &CoverageConfig) -> Result<CoverageCurves> {
    if config.n_grid.is_empty() || config.q_grid.is_empty() {
        return domain("coverage study needs at least one sample size and one q");
    }
    let family = config.scenario.assumed_family();
    let spec = logit_spec(family);
    let mut points = Vec::new();
    let mut failed = Vec::new();
    for &n in &config.n_grid {
        let sim_config = SimConfig {
            scenario: config.scenario,
            n,
            m: config.m,
            replicates: config.replicates,
            seed: config.seed,
        };
        sim_config.validate()?;
        let runs: Vec<_> = (0..config.replicates)
            .into_par_iter()
            .map(|r| {
                let sim = generate(config.scenario, n, config.m, sim_config.stream(r)).ok()?;
                loo_coverage(&spec, &sim.data, &config.q_grid).ok()
            })
            .collect();
        let done: Vec<_> = runs.into_iter().flatten().collect();
        failed.push(config.replicates - done.len());
        if done.is_empty() {
            return Err(Error::NotConverged(format!("no coverage replicate completed at n = {n}")));
        }
        for (j, &q) in config.q_grid.iter().enumerate() {
            let pick = |f: fn(&crate::prediction::CoverageReport) -> f64| done.iter().map(|r| f(&r[j])).collect::<Vec<_>>();
            let cov_mode = pick(|c| c.coverage_mode);
            points.push(CoveragePoint {
                n,
                q,
                coverage_mode: mean(&cov_mode),
                coverage_mean: mean(&pick(|c| c.coverage_mean)),
                coverage_mode_se: sample_sd(&cov_mode) / (cov_mode.len() as f64).sqrt(),
                width_mode: mean(&pick(|c| c.width_mode)),
                width_mean: mean(&pick(|c| c.width_mean)),
                width_ratio: mean(&pick(|c| c.width_mean / c.width_mode)),
            });
        }
    }
    Ok(CoverageCurves {
        scenario: config.scenario,
        family,
        m: config.m,
        replicates: config.replicates,
        failed,
        points,
    })
}

/// One generated dataset and its half-normal envelope under `family`.
pub fn run_envelope_demo(family: Family, config: &SimConfig) -> Result<EnvelopeResult> {
    config.validate()?;
    let stream = config.stream(0);
    let sim = generate(config.scenario, config.n, config.m, stream)?;
    halfnormal_envelope(
        &logit_spec(family),
        &sim.data,
        DEFAULT_ENVELOPE_SIMULATIONS,
        stream.substream(ENVELOPE_SUBSTREAM),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeStudy {
    pub config: SimConfig,
    pub family: Family,
    pub mean_proportion_outside: f64,
    pub proportions: Vec<f64>,
    pub failed: usize,
}

/// Envelope `proportion_outside` over `config.replicates` datasets.
pub fn run_envelope_study(family: Family, config: &SimConfig) -> Result<EnvelopeStudy> {
    config.validate()?;
    let spec = logit_spec(family);
    let runs: Vec<Option<f64>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let stream = config.stream(r);
            let sim = generate(config.scenario, config.n, config.m, stream).ok()?;
            halfnormal_envelope(&spec, &sim.data, DEFAULT_ENVELOPE_SIMULATIONS, stream.substream(ENVELOPE_SUBSTREAM))
                .ok()
                .map(|e| e.proportion_outside)
        })
        .collect();
    let proportions: Vec<f64> = runs.into_iter().flatten().collect();
    if proportions.is_empty() {
        return Err(Error::NotConverged(format!("no envelope replicate of {} completed", config.scenario)));
    }
    Ok(EnvelopeStudy {
        config: *config,
        family,
        mean_proportion_outside: mean(&proportions),
        failed: config.replicates - proportions.len(),
        proportions,
    })
}

/// Any study result, tagged by study type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "study", rename_all = "snake_case")]
pub enum MonteCarloSummary {
    Mle(MleSummary),
    Power(PowerTable),
    Coverage(CoverageCurves),
    Envelope(EnvelopeStudy),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_replicate_equals_single_fit() {
        let config = SimConfig {
            replicates: 1,
            ..SimConfig::new(ScenarioId::G1, 40, 5)
        };
        let summary = run_mle_study(&config).unwrap();
        let sim = generate(ScenarioId::G1, 40, 10.0, RngStream::new(5, 0)).unwrap();
        let f = fit(&logit_spec(Family::GbpMode), &sim.data, &FitOptions::default()).unwrap();
        assert_eq!(summary.avg_estimate, f.params.to_vec());
        assert_eq!(Some(summary.avg_sd), f.std_errors);
        assert!(summary.empirical_sd.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn level_one_rejects_everything() {
        let table = run_power_study(&PowerConfig {
            family: Family::BetaMode,
            scenarios: vec![ScenarioId::B1],
            n_grid: vec![30],
            level: 1.0,
            replicates: 3,
            b: 5,
            seed: 1,
        })
        .unwrap();
        assert_eq!(table.rate(ScenarioId::B1, 30), Some(1.0));
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(ScenarioId::B1, 9, 0).validate().is_err());
        let zero = SimConfig {
            replicates: 0,
            ..SimConfig::new(ScenarioId::B1, 50, 0)
        };
        assert!(zero.validate().is_err());
    }
}
