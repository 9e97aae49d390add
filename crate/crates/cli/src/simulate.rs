use std::path::Path;

use anyhow::{bail, Context, Result};
use modereg::numerics::RngStream;
use modereg::regression::Family;
use modereg::simharness::{
    generate, run_coverage_study, run_envelope_demo, run_envelope_study, run_mle_study, run_power_study,
    CoverageConfig, MonteCarloSummary, PowerConfig, ScenarioId, SimConfig,
};
use serde::{Deserialize, Serialize};

use crate::args::{SimulateArgs, Study};
use crate::output::{cell, write_json, CsvOut, SCHEMA_VERSION};
use crate::Status;

const DEFAULT_SEED: u64 = 1;

#[derive(Deserialize, Debug, Clone)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Study settings read from a TOML file.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct StudyFile {
    study: Option<String>,
    #[serde(alias = "scenarios")]
    scenario: Option<OneOrMany<String>>,
    #[serde(alias = "n_grid")]
    n: Option<OneOrMany<usize>>,
    m: Option<f64>,
    replicates: Option<usize>,
    b: Option<usize>,
    level: Option<f64>,
    #[serde(alias = "q_grid")]
    q: Option<OneOrMany<f64>>,
    family: Option<String>,
    seed: Option<u64>,
    fast: Option<bool>,
}

/// Flags merged over the config file, then over the defaults.
struct Settings {
    study: Option<Study>,
    scenarios: Vec<ScenarioId>,
    n: Vec<usize>,
    m: Option<f64>,
    replicates: usize,
    b: usize,
    level: f64,
    q: Vec<f64>,
    family: Option<Family>,
    seed: u64,
}

fn parse_study(s: &str) -> Result<Study> {
    Ok(match s.to_ascii_lowercase().replace('-', "_").as_str() {
        "mle" => Study::Mle,
        "power" => Study::Power,
        "coverage" => Study::Coverage,
        "envelope" => Study::Envelope,
        "envelope_study" => Study::EnvelopeStudy,
        other => bail!("unknown study '{other}'; expected mle, power, coverage, envelope or envelope_study"),
    })
}

fn settings(args: &SimulateArgs) -> Result<Settings> {
    let file: StudyFile = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))?
        }
        None => StudyFile::default(),
    };
    let fast = args.fast || file.fast.unwrap_or(false);
    let study = match (args.study, &file.study) {
        (Some(s), _) => Some(s),
        (None, Some(s)) => Some(parse_study(s)?),
        (None, None) => None,
    };
    let scenarios = if !args.scenario.is_empty() {
        args.scenario.clone()
    } else if let Some(list) = &file.scenario {
        list.to_vec().iter().map(|s| s.parse()).collect::<modereg::Result<_>>()?
    } else {
        Vec::new()
    };
    let family = match (args.family, &file.family) {
        (Some(f), _) => Some(f),
        (None, Some(f)) => Some(f.parse()?),
        (None, None) => None,
    };
    Ok(Settings {
        study,
        scenarios,
        n: if !args.n.is_empty() {
            args.n.clone()
        } else {
            file.n.as_ref().map(OneOrMany::to_vec).unwrap_or_default()
        },
        m: args.m.or(file.m),
        replicates: args.replicates.or(file.replicates).unwrap_or(if fast { 50 } else { 300 }),
        b: args.b.or(file.b).unwrap_or(if fast { 100 } else { 300 }),
        level: args.level.or(file.level).unwrap_or(0.05),
        q: if !args.q.is_empty() {
            args.q.clone()
        } else {
            file.q.as_ref().map(OneOrMany::to_vec).unwrap_or_default()
        },
        family,
        seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
    })
}

impl Settings {
    fn one_scenario(&self) -> Result<ScenarioId> {
        match self.scenarios.as_slice() {
            [] => Ok(ScenarioId::B1),
            [s] => Ok(*s),
            _ => bail!("this study takes a single --scenario"),
        }
    }

    fn one_n(&self, default: usize) -> Result<usize> {
        match self.n.as_slice() {
            [] => Ok(default),
            [n] => Ok(*n),
            _ => bail!("this study takes a single --n"),
        }
    }

    fn sim_config(&self) -> Result<SimConfig> {
        let scenario = self.one_scenario()?;
        Ok(SimConfig {
            scenario,
            n: self.one_n(100)?,
            m: self.m.unwrap_or(scenario.default_m()),
            replicates: self.replicates,
            seed: self.seed,
        })
    }
}

#[derive(Serialize)]
struct StudyReport<T: Serialize> {
    schema_version: u32,
    command: &'static str,
    summary: T,
}

#[derive(Serialize)]
struct EnvelopeDemoReport {
    study: &'static str,
    scenario: ScenarioId,
    family: Family,
    n: usize,
    m: f64,
    seed: u64,
    k_simulations: usize,
    proportion_outside: f64,
}

pub fn run(args: &SimulateArgs) -> Result<Status> {
    let s = settings(args)?;
    let Some(study) = s.study else {
        return write_dataset(&s, args);
    };
    let csv = args.csv.as_deref();
    let summary = match study {
        Study::Mle => {
            let summary = run_mle_study(&s.sim_config()?)?;
            if let Some(path) = csv {
                let mut out = CsvOut::create(Some(path), &["parameter", "avg_estimate", "avg_sd", "empirical_sd", "mc_se"])?;
                for j in 0..summary.parameter_names.len() {
                    out.row(&[
                        summary.parameter_names[j].clone(),
                        cell(summary.avg_estimate[j]),
                        cell(summary.avg_sd[j]),
                        cell(summary.empirical_sd[j]),
                        cell(summary.mc_se[j]),
                    ])?;
                }
                out.finish()?;
            }
            eprintln!("replicates used: {}, failed: {}", summary.used, summary.failed);
            MonteCarloSummary::Mle(summary)
        }
        Study::Power => {
            let scenarios = if s.scenarios.is_empty() {
                vec![ScenarioId::B1, ScenarioId::B2, ScenarioId::B3, ScenarioId::B4]
            } else {
                s.scenarios.clone()
            };
            let family = s.family.unwrap_or(scenarios[0].assumed_family());
            let table = run_power_study(&PowerConfig {
                family,
                scenarios,
                n_grid: if s.n.is_empty() { vec![50, 100, 150] } else { s.n.clone() },
                level: s.level,
                replicates: s.replicates,
                b: s.b,
                seed: s.seed,
            })?;
            if let Some(path) = csv {
                let mut out = CsvOut::create(
                    Some(path),
                    &["scenario", "n", "rejection_rate", "rejections", "completed", "failed"],
                )?;
                for c in &table.cells {
                    out.row(&[
                        cell(c.scenario),
                        cell(c.n),
                        cell(c.rejection_rate),
                        cell(c.rejections),
                        cell(c.completed),
                        cell(c.failed),
                    ])?;
                }
                out.finish()?;
            }
            MonteCarloSummary::Power(table)
        }
        Study::Coverage => {
            let scenario = s.one_scenario()?;
            let curves = run_coverage_study(&CoverageConfig {
                scenario,
                m: s.m.unwrap_or(10.0),
                n_grid: if s.n.is_empty() { vec![150] } else { s.n.clone() },
                q_grid: if s.q.is_empty() {
                    (1..=10).map(|i| f64::from(i) * 0.05).collect()
                } else {
                    s.q.clone()
                },
                replicates: s.replicates,
                seed: s.seed,
            })?;
            if let Some(path) = csv {
                let mut out = CsvOut::create(
                    Some(path),
                    &["n", "q", "coverage_mode", "coverage_mean", "width_mode", "width_mean", "width_ratio"],
                )?;
                for p in &curves.points {
                    out.row(&[
                        cell(p.n),
                        cell(p.q),
                        cell(p.coverage_mode),
                        cell(p.coverage_mean),
                        cell(p.width_mode),
                        cell(p.width_mean),
                        cell(p.width_ratio),
                    ])?;
                }
                out.finish()?;
            }
            MonteCarloSummary::Coverage(curves)
        }
        Study::Envelope => return envelope_demo(&s, args),
        Study::EnvelopeStudy => {
            let config = s.sim_config()?;
            let family = s.family.unwrap_or(config.scenario.assumed_family());
            let result = run_envelope_study(family, &config)?;
            if let Some(path) = csv {
                let mut out = CsvOut::create(Some(path), &["replicate", "proportion_outside"])?;
                for (i, p) in result.proportions.iter().enumerate() {
                    out.row(&[cell(i + 1), cell(p)])?;
                }
                out.finish()?;
            }
            MonteCarloSummary::Envelope(result)
        }
    };
    write_json(
        args.output.as_deref(),
        &StudyReport {
            schema_version: SCHEMA_VERSION,
            command: "simulate",
            summary,
        },
    )?;
    Ok(Status::Done)
}

fn envelope_demo(s: &Settings, args: &SimulateArgs) -> Result<Status> {
    let config = s.sim_config()?;
    let family = s.family.unwrap_or(config.scenario.assumed_family());
    let env = run_envelope_demo(family, &config)?;
    if let Some(path) = args.csv.as_deref() {
        let mut out = CsvOut::create(Some(path), &["rank", "quantile", "residual", "lower", "upper"])?;
        for i in 0..env.quantiles.len() {
            out.row(&[
                cell(i + 1),
                cell(env.quantiles[i]),
                cell(env.residuals_sorted[i]),
                cell(env.lower[i]),
                cell(env.upper[i]),
            ])?;
        }
        out.finish()?;
    }
    write_json(
        args.output.as_deref(),
        &StudyReport {
            schema_version: SCHEMA_VERSION,
            command: "simulate",
            summary: EnvelopeDemoReport {
                study: "envelope",
                scenario: config.scenario,
                family,
                n: config.n,
                m: config.m,
                seed: config.seed,
                k_simulations: env.k_simulations,
                proportion_outside: env.proportion_outside,
            },
        },
    )?;
    Ok(Status::Done)
}

/// One dataset as CSV with columns `y, x1, x2`.
fn write_dataset(s: &Settings, args: &SimulateArgs) -> Result<Status> {
    let scenario = s.one_scenario()?;
    let n = s.one_n(100)?;
    let m = s.m.unwrap_or(scenario.default_m());
    let sim = generate(scenario, n, m, RngStream::new(s.seed, args.replicate))?;
    let mut out = CsvOut::create(args.output.as_deref(), &["y", "x1", "x2"])?;
    for i in 0..n {
        let x = sim.data.row(i);
        out.row(&[cell(sim.data.y()[i]), cell(x[0]), cell(x[1])])?;
    }
    out.finish()?;
    if let Some(path) = args.truth.as_deref() {
        write_truth(path, &sim.theta)?;
    }
    Ok(Status::Done)
}

fn write_truth(path: &Path, theta: &[f64]) -> Result<()> {
    let mut out = CsvOut::create(Some(path), &["row", "theta"])?;
    for (i, t) in theta.iter().enumerate() {
        out.row(&[cell(i + 1), cell(t)])?;
    }
    out.finish()
}
