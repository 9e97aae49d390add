//! Half-normal residual envelopes and moment-matching score tests with
//! parametric-bootstrap p-values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{gbp_mean, gbp_variance, BoundedDistribution};
use crate::error::{domain, Error, Result};
use crate::links::{apply, LinkKind};
use crate::numerics::rng::RngStream;
use crate::numerics::special::{psi, std_normal_quantile};
use crate::regression::{
    conditional_dist, fit, fit_from, simulate_responses, Dataset, Family, FitOptions, FitResult, ModelSpec, Params,
};

/// Fresh draws allowed per simulated replicate whose refit fails.
pub const MAX_RETRIES: usize = 10;

/// Default number of envelope simulations.
pub const DEFAULT_ENVELOPE_SIMULATIONS: usize = 19;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeResult {
    pub quantiles: Vec<f64>,
    pub residuals_sorted: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub proportion_outside: f64,
    pub k_simulations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTestResult {
    pub q_observed: f64,
    pub q_bootstrap: Vec<f64>,
    /// Fraction of bootstrap statistics strictly above `q_observed`.
    pub p_value: f64,
    pub b: usize,
    /// Tail probability of `F(2, n−2)` at `q_observed`. Only a reference:
    /// the score vectors are not bivariate normal in general.
    pub f_reference_p_value: f64,
}

/// `|yᵢ − μ̂(xᵢ)| / σ̂(xᵢ)` under the fitted model.
pub fn abs_std_residuals(fit: &FitResult, data: &Dataset) -> Result<Vec<f64>> {
    residuals_at(&fit.spec, &fit.params, data)
}

fn residuals_at(spec: &ModelSpec, params: &Params, data: &Dataset) -> Result<Vec<f64>> {
    if params.beta.len() != data.p() + 1 {
        return Err(Error::DimensionMismatch {
            expected: data.p() + 1,
            got: params.beta.len(),
        });
    }
    (0..data.n())
        .map(|i| {
            let d = conditional_dist(spec, params, data.row(i)).build()?;
            let sd = d.variance().sqrt();
            if !(sd > 0.0) {
                return Err(Error::Degenerate(format!("zero conditional standard deviation at row {i}")));
            }
            Ok((data.y()[i] - d.mean()).abs() / sd)
        })
        .collect()
}

/// Half-normal plotting positions `Φ⁻¹((i + n − 1/8)/(2n + 1/2))`, `i = 1..n`.
pub fn halfnormal_quantiles(n: usize) -> Vec<f64> {
    let nf = n as f64;
    (1..=n)
        .map(|i| std_normal_quantile((i as f64 + nf - 0.125) / (2.0 * nf + 0.5)).expect("inside (0,1)"))
        .collect()
}

/// Runs `attempt` on `stream`, and on failure on up to [`MAX_RETRIES`]
/// fresh substreams of it.
pub(crate) fn with_retries<T>(context: &str, stream: RngStream, attempt: impl Fn(RngStream) -> Result<T>) -> Result<T> {
    let mut last = match attempt(stream) {
        Ok(v) => return Ok(v),
        Err(e) => e,
    };
    for k in 1..=MAX_RETRIES {
        match attempt(stream.substream(k as u64)) {
            Ok(v) => return Ok(v),
            Err(e) => last = e,
        }
    }
    Err(Error::RetriesExhausted {
        context: context.to_string(),
        attempts: MAX_RETRIES + 1,
        source: Box::new(last),
    })
}

/// Simulates responses from `params`, refits warm-started at `params`, and
/// hands the converged refit to `finish`.
fn simulate_and_refit<T>(
    spec: &ModelSpec,
    params: &Params,
    data: &Dataset,
    stream: RngStream,
    finish: impl Fn(&FitResult, &Dataset) -> Result<T>,
) -> Result<T> {
    let y = simulate_responses(spec, params, data, &mut stream.generator())?;
    let sim = data.with_responses(y)?;
    let refit = fit_from(spec, &sim, params, &FitOptions::refit())?;
    if !refit.converged {
        return Err(Error::NotConverged("refit on simulated responses".into()));
    }
    finish(&refit, &sim)
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Fits `spec` to `data` and builds a `k`-simulation envelope.
pub fn halfnormal_envelope(spec: &ModelSpec, data: &Dataset, k: usize, stream: RngStream) -> Result<EnvelopeResult> {
    let options = FitOptions {
        covariance: false,
        ..FitOptions::default()
    };
    let fitted = fit(spec, data, &options)?;
    if !fitted.converged {
        return Err(Error::NotConverged("envelope fit on observed data".into()));
    }
    envelope_from_fit(&fitted, data, k, stream)
}

/// Envelope around an existing fit. Simulation `s` uses `stream.substream(s)`.
pub fn envelope_from_fit(fitted: &FitResult, data: &Dataset, k: usize, stream: RngStream) -> Result<EnvelopeResult> {
    if k == 0 {
        return domain("envelope needs at least one simulation");
    }
    let observed = sorted(abs_std_residuals(fitted, data)?);
    let spec = fitted.spec;
    let simulated: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|s| {
            with_retries(&format!("envelope simulation {s}"), stream.substream(s as u64), |st| {
                simulate_and_refit(&spec, &fitted.params, data, st, |refit, sim| {
                    Ok(sorted(residuals_at(&spec, &refit.params, sim)?))
                })
            })
        })
        .collect::<Result<_>>()?;
    let n = data.n();
    let lower: Vec<f64> = (0..n).map(|i| simulated.iter().map(|r| r[i]).fold(f64::INFINITY, f64::min)).collect();
    let upper: Vec<f64> = (0..n).map(|i| simulated.iter().map(|r| r[i]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let outside = observed
        .iter()
        .zip(lower.iter().zip(&upper))
        .filter(|(r, (lo, hi))| *r < lo || *r > hi)
        .count();
    Ok(EnvelopeResult {
        quantiles: halfnormal_quantiles(n),
        residuals_sorted: observed,
        lower,
        upper,
        proportion_outside: outside as f64 / n as f64,
        k_simulations: k,
    })
}

/// Beta-mode score `[ln y − ψ(1+mθ) + ψ(2+m), y ln y − (1+mθ)(ψ(2+mθ) − ψ(3+m))/(2+m)]`.
pub fn beta_score(theta: f64, m: f64, y: f64) -> Result<[f64; 2]> {
    check_response(y)?;
    if !(theta > 0.0 && theta < 1.0 && m > 0.0 && m.is_finite()) {
        return domain(format!("invalid beta-mode parameters (theta={theta}, m={m})"));
    }
    Ok(beta_score_unchecked(theta, m, y))
}

fn beta_score_unchecked(theta: f64, m: f64, y: f64) -> [f64; 2] {
    let a = 1.0 + m * theta;
    let ln_y = y.ln();
    [
        ln_y - psi(a) + psi(2.0 + m),
        y * ln_y - a * (psi(a + 1.0) - psi(3.0 + m)) / (2.0 + m),
    ]
}

/// GBP score `[y − E, y² − Var − E²]` from the closed-form moments.
pub fn gbp_score(theta: f64, m: f64, y: f64) -> Result<[f64; 2]> {
    check_response(y)?;
    if !(theta > 0.0 && theta < 1.0 && m > 0.0 && m.is_finite()) {
        return domain(format!("invalid GBP parameters (theta={theta}, m={m})"));
    }
    Ok(gbp_score_unchecked(theta, m, y))
}

fn gbp_score_unchecked(theta: f64, m: f64, y: f64) -> [f64; 2] {
    let mean = gbp_mean(theta, m);
    [y - mean, y * y - gbp_variance(theta, m) - mean * mean]
}

fn check_response(y: f64) -> Result<()> {
    if y > 0.0 && y < 1.0 {
        Ok(())
    } else {
        domain(format!("score requires y in (0,1), got {y}"))
    }
}

/// Score of observation `(y, x)` under a beta-mode regression.
pub fn score_vector_beta(link: LinkKind, params: &Params, y: f64, x: &[f64]) -> Result<[f64; 2]> {
    beta_score(apply(link, checked_eta(params, x)?), params.scale(), y)
}

/// Score of observation `(y, x)` under a GBP-mode regression.
pub fn score_vector_gbp(link: LinkKind, params: &Params, y: f64, x: &[f64]) -> Result<[f64; 2]> {
    gbp_score(apply(link, checked_eta(params, x)?), params.scale(), y)
}

fn checked_eta(params: &Params, x: &[f64]) -> Result<f64> {
    if x.len() + 1 != params.beta.len() {
        return Err(Error::DimensionMismatch {
            expected: params.beta.len() - 1,
            got: x.len(),
        });
    }
    Ok(params.linear_predictor(x))
}

/// Score rows for every observation under a mode family.
pub fn score_matrix(spec: &ModelSpec, params: &Params, data: &Dataset) -> Result<Vec<[f64; 2]>> {
    let score: fn(f64, f64, f64) -> [f64; 2] = match spec.family {
        Family::BetaMode => beta_score_unchecked,
        Family::GbpMode => gbp_score_unchecked,
        Family::BetaMean => return Err(Error::Unsupported("score test is defined for mode families only".into())),
    };
    let m = params.scale();
    (0..data.n())
        .map(|i| {
            let theta = apply(spec.link, checked_eta(params, data.row(i))?);
            Ok(score(theta, m, data.y()[i]))
        })
        .collect()
}

/// Hotelling-type statistic `(n−2)/(2(n−1)) · S̄ᵀ Σ̂⁻¹ S̄` with
/// `Σ̂ = Σ(Sᵢ−S̄)(Sᵢ−S̄)ᵀ / (n(n−1))`.
///
/// `Σ̂` counts as degenerate when `det Σ̂ ≤ 1e-14 · Σ̂₁₁ Σ̂₂₂`, i.e. when the
/// two score components are collinear to within 1e-14 in squared correlation.
pub fn q_statistic(scores: &[[f64; 2]]) -> Result<f64> {
    let n = scores.len();
    if n < 3 {
        return domain(format!("Q statistic needs at least 3 score rows, got {n}"));
    }
    if scores.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite score".into()));
    }
    let nf = n as f64;
    let mean = [
        scores.iter().map(|s| s[0]).sum::<f64>() / nf,
        scores.iter().map(|s| s[1]).sum::<f64>() / nf,
    ];
    let (mut s11, mut s12, mut s22) = (0.0, 0.0, 0.0);
    for s in scores {
        let (a, b) = (s[0] - mean[0], s[1] - mean[1]);
        s11 += a * a;
        s12 += a * b;
        s22 += b * b;
    }
    let scale = nf * (nf - 1.0);
    let (s11, s12, s22) = (s11 / scale, s12 / scale, s22 / scale);
    let det = s11 * s22 - s12 * s12;
    if !(s11 > 0.0 && s22 > 0.0) || det <= 1e-14 * s11 * s22 {
        return Err(Error::Degenerate("score covariance is singular".into()));
    }
    let quad = (s22 * mean[0] * mean[0] - 2.0 * s12 * mean[0] * mean[1] + s11 * mean[1] * mean[1]) / det;
    Ok(((nf - 2.0) / (2.0 * (nf - 1.0)) * quad).max(0.0))
}

/// `#{Q_b > Q_obs} / B`.
pub fn bootstrap_p_value(q_observed: f64, q_bootstrap: &[f64]) -> f64 {
    q_bootstrap.iter().filter(|&&q| q > q_observed).count() as f64 / q_bootstrap.len() as f64
}

/// `P(F(2, ν) > x) = (1 + 2x/ν)^(−ν/2)`.
pub fn f2_survival(x: f64, nu: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        (1.0 + 2.0 * x / nu).powf(-nu / 2.0)
    }
}

/// Fits `spec` and runs a `b`-sample parametric-bootstrap score test.
/// Bootstrap sample `j` uses `stream.substream(j)`.
pub fn bootstrap_score_test(spec: &ModelSpec, data: &Dataset, b: usize, stream: RngStream) -> Result<ScoreTestResult> {
    if !spec.family.is_mode_family() {
        return Err(Error::Unsupported("score test is defined for beta_mode and gbp_mode only".into()));
    }
    let options = FitOptions {
        covariance: false,
        ..FitOptions::default()
    };
    let fitted = fit(spec, data, &options)?;
    if !fitted.converged {
        return Err(Error::NotConverged("score-test fit on observed data".into()));
    }
    score_test_from_fit(&fitted, data, b, stream)
}

/// Bootstrap score test around an existing fit.
pub fn score_test_from_fit(fitted: &FitResult, data: &Dataset, b: usize, stream: RngStream) -> Result<ScoreTestResult> {
    if b == 0 {
        return domain("bootstrap count must be at least 1");
    }
    let spec = fitted.spec;
    let q_observed = q_statistic(&score_matrix(&spec, &fitted.params, data)?)?;
    let q_bootstrap: Vec<f64> = (0..b)
        .into_par_iter()
        .map(|j| {
            with_retries(&format!("bootstrap sample {j}"), stream.substream(j as u64), |st| {
                simulate_and_refit(&spec, &fitted.params, data, st, |refit, sim| {
                    q_statistic(&score_matrix(&spec, &refit.params, sim)?)
                })
            })
        })
        .collect::<Result<_>>()?;
    Ok(ScoreTestResult {
        p_value: bootstrap_p_value(q_observed, &q_bootstrap),
        f_reference_p_value: f2_survival(q_observed, data.n() as f64 - 2.0),
        q_observed,
        q_bootstrap,
        b,
    })
}
