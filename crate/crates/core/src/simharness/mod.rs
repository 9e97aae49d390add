//! Scenario data generators and Monte Carlo studies.

mod scenario;
mod study;

pub use scenario::{draw_covariates, draw_response, generate, probit_mixture, ScenarioId, SimulatedData};
pub use study::{
    run_coverage_study, run_envelope_demo, run_envelope_study, run_mle_study, run_power_study, CoverageConfig,
    CoverageCurves, CoveragePoint, EnvelopeStudy, MleSummary, MonteCarloSummary, PowerCell, PowerConfig, PowerTable,
    SimConfig,
};
