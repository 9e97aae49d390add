use anyhow::{bail, Result};
use modereg::diagnostics::{bootstrap_score_test, halfnormal_envelope};
use modereg::links::LinkKind;
use modereg::numerics::RngStream;
use modereg::prediction::{
    fixed_width_loo_coverage, fixed_width_pair, kfold_coverage, loo_coverage, mean_interval, mean_residual_sd,
    mode_interval, CoverageReport,
};
use modereg::regression::{self, conditional_summary, Dataset, Family, FitOptions, FitResult, ModelSpec};
use serde::Serialize;

use crate::args::{CoverageArgs, DataArgs, EnvelopeArgs, FitArgs, ModelArgs, PredictArgs, ScoreTestArgs};
use crate::output::{cell, write_json, CsvOut, SCHEMA_VERSION};
use crate::table::{dataset, Design, Table};
use crate::Status;

pub struct Loaded {
    pub data: Dataset,
    pub design: Design,
}

pub fn load(args: &DataArgs) -> Result<Loaded> {
    let table = Table::read(&args.input)?;
    let design = Design::learn(&table, &args.response, args.covariates.as_deref(), &args.dummies)?;
    let data = dataset(&table, &args.response, &design, args.rescale_divisor, args.squeeze)?;
    Ok(Loaded { data, design })
}

fn spec(model: &ModelArgs, data: &DataArgs) -> ModelSpec {
    ModelSpec {
        squeeze: data.squeeze,
        ..ModelSpec::new(model.family, model.link)
    }
}

#[derive(Serialize)]
struct Coefficient {
    name: String,
    estimate: f64,
    std_error: Option<f64>,
}

#[derive(Serialize)]
struct LinkRow {
    link: LinkKind,
    loglik: f64,
    converged: bool,
}

#[derive(Serialize)]
struct FitReport {
    schema_version: u32,
    command: &'static str,
    family: Family,
    link: LinkKind,
    n: usize,
    squeezed: bool,
    parameters: Vec<Coefficient>,
    /// `m` for mode families, `φ` for `beta_mean`.
    scale: f64,
    loglik: f64,
    converged: bool,
    iterations: usize,
    evaluations: usize,
    covariance: Option<Vec<Vec<f64>>>,
    covariance_psd: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    covariance_note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    link_comparison: Option<Vec<LinkRow>>,
}

pub fn parameter_names(family: Family, covariates: &[String]) -> Vec<String> {
    let scale = if family == Family::BetaMean { "log_phi" } else { "log_m" };
    std::iter::once("(intercept)".to_string())
        .chain(covariates.iter().cloned())
        .chain(std::iter::once(scale.to_string()))
        .collect()
}

fn fit_report(f: &FitResult, names: &[String]) -> FitReport {
    let estimates = f.params.to_vec();
    FitReport {
        schema_version: SCHEMA_VERSION,
        command: "fit",
        family: f.spec.family,
        link: f.spec.link,
        n: f.n,
        squeezed: f.squeezed,
        parameters: names
            .iter()
            .zip(&estimates)
            .enumerate()
            .map(|(j, (name, &estimate))| Coefficient {
                name: name.clone(),
                estimate,
                std_error: f.std_errors.as_ref().map(|s| s[j]),
            })
            .collect(),
        scale: f.params.scale(),
        loglik: f.loglik,
        converged: f.converged,
        iterations: f.iterations,
        evaluations: f.evaluations,
        covariance: f.covariance.clone(),
        covariance_psd: f.covariance_psd,
        covariance_note: f.covariance_note.clone(),
        link_comparison: None,
    }
}

fn converged(f: &FitResult) -> Status {
    if f.converged {
        Status::Done
    } else {
        Status::NotConverged("the optimizer did not converge".into())
    }
}

pub fn fit(args: &FitArgs) -> Result<Status> {
    let loaded = load(&args.data)?;
    let spec = spec(&args.model, &args.data);
    let f = regression::fit(&spec, &loaded.data, &FitOptions::default())?;
    let mut report = fit_report(&f, &parameter_names(spec.family, loaded.data.column_names()));
    if args.compare_links {
        let options = FitOptions {
            covariance: false,
            ..FitOptions::default()
        };
        report.link_comparison = Some(
            LinkKind::ALL
                .iter()
                .map(|&link| {
                    let other = regression::fit(&ModelSpec { link, ..spec }, &loaded.data, &options)?;
                    Ok(LinkRow {
                        link,
                        loglik: other.loglik,
                        converged: other.converged,
                    })
                })
                .collect::<Result<_>>()?,
        );
    }
    write_json(args.output.as_deref(), &report)?;
    Ok(converged(&f))
}

#[derive(Serialize)]
struct EnvelopeSummary {
    schema_version: u32,
    command: &'static str,
    family: Family,
    link: LinkKind,
    n: usize,
    k_simulations: usize,
    proportion_outside: f64,
}

pub fn envelope(args: &EnvelopeArgs) -> Result<Status> {
    let loaded = load(&args.data)?;
    let spec = spec(&args.model, &args.data);
    let env = halfnormal_envelope(&spec, &loaded.data, args.k, RngStream::new(args.seed.seed, 0))?;
    let mut out = CsvOut::create(args.output.as_deref(), &["rank", "quantile", "residual", "lower", "upper"])?;
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
    eprintln!("proportion_outside: {}", env.proportion_outside);
    if let Some(path) = &args.summary {
        write_json(
            Some(path),
            &EnvelopeSummary {
                schema_version: SCHEMA_VERSION,
                command: "envelope",
                family: spec.family,
                link: spec.link,
                n: loaded.data.n(),
                k_simulations: env.k_simulations,
                proportion_outside: env.proportion_outside,
            },
        )?;
    }
    Ok(Status::Done)
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct ScoreTestReport {
    schema_version: u32,
    command: &'static str,
    family: Family,
    link: LinkKind,
    n: usize,
    Q_obs: f64,
    p_value: f64,
    B: usize,
    f_reference_p_value: f64,
}

pub fn scoretest(args: &ScoreTestArgs) -> Result<Status> {
    let loaded = load(&args.data)?;
    let spec = spec(&args.model, &args.data);
    let t = bootstrap_score_test(&spec, &loaded.data, args.b, RngStream::new(args.seed.seed, 0))?;
    write_json(
        args.output.as_deref(),
        &ScoreTestReport {
            schema_version: SCHEMA_VERSION,
            command: "scoretest",
            family: spec.family,
            link: spec.link,
            n: loaded.data.n(),
            Q_obs: t.q_observed,
            p_value: t.p_value,
            B: t.b,
            f_reference_p_value: t.f_reference_p_value,
        },
    )?;
    Ok(Status::Done)
}

pub fn predict(args: &PredictArgs) -> Result<Status> {
    let loaded = load(&args.data)?;
    let spec = spec(&args.model, &args.data);
    let options = FitOptions {
        covariance: false,
        ..FitOptions::default()
    };
    let f = regression::fit(&spec, &loaded.data, &options)?;
    if !f.converged {
        return Ok(converged(&f));
    }
    let rows = match &args.new {
        Some(path) => loaded.design.rows(&Table::read(path)?)?,
        None => (0..loaded.data.n()).map(|i| loaded.data.row(i).to_vec()).collect(),
    };
    let sigma_hat = if args.k.is_empty() {
        f64::NAN
    } else {
        mean_residual_sd(&spec, &f.params, &loaded.data)?
    };
    let mut out = CsvOut::create(
        args.output.as_deref(),
        &["row", "kind", "q_or_k", "lower", "upper", "truncated", "theta", "mu"],
    )?;
    for (i, x) in rows.iter().enumerate() {
        let s = conditional_summary(&f, x)?;
        let theta = s.theta.map_or_else(String::new, cell);
        let mut emit = |kind: &str, nominal: f64, lo: f64, hi: f64, truncated: bool| {
            out.row(&[
                cell(i + 1),
                kind.to_string(),
                cell(nominal),
                cell(lo),
                cell(hi),
                cell(truncated),
                theta.clone(),
                cell(s.mu),
            ])
        };
        for &q in &args.q {
            let m = mode_interval(&f, x, q)?;
            emit("mode", q, m.lower, m.upper, m.truncated)?;
            let m = mean_interval(&f, x, q)?;
            emit("mean", q, m.lower, m.upper, m.truncated)?;
        }
        for &k in &args.k {
            let (a, b) = fixed_width_pair(&spec, &f.params, x, sigma_hat, k)?;
            emit("fixed_mode", k, a.lower, a.upper, a.truncated)?;
            emit("fixed_mean", k, b.lower, b.upper, b.truncated)?;
        }
    }
    out.finish()?;
    Ok(Status::Done)
}

pub fn coverage(args: &CoverageArgs) -> Result<Status> {
    let loaded = load(&args.data)?;
    let spec = spec(&args.model, &args.data);
    let reports: Vec<CoverageReport> = if !args.k.is_empty() {
        if args.folds != 0 {
            bail!("fixed-width coverage (--k) uses leave-one-out; drop --folds");
        }
        fixed_width_loo_coverage(&spec, &loaded.data, &args.k)?
    } else {
        let q = if args.q.is_empty() {
            (1..=10).map(|i| f64::from(i) * 0.05).collect()
        } else {
            args.q.clone()
        };
        match args.folds {
            0 => loo_coverage(&spec, &loaded.data, &q)?,
            1 => bail!("--folds must be 0 (leave-one-out) or at least 2"),
            k => kfold_coverage(&spec, &loaded.data, &q, k, RngStream::new(args.seed.seed, 0))?,
        }
    };
    let mut out = CsvOut::create(
        args.output.as_deref(),
        &["q_or_k", "coverage_mode", "coverage_mean", "width_mode", "width_mean"],
    )?;
    for r in &reports {
        out.row(&[
            cell(r.nominal),
            cell(r.coverage_mode),
            cell(r.coverage_mean),
            cell(r.width_mode),
            cell(r.width_mean),
        ])?;
    }
    out.finish()?;
    Ok(Status::Done)
}
