use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::likelihood::{log_likelihood_unchecked, observation_terms};
use super::model::{Family, ModelSpec, Params};
use crate::distributions::{BoundedDistribution, ConditionalDist};
use crate::error::{Error, Result};
use crate::links::{apply, invert};
use crate::numerics::diff::{finite_diff_gradient, finite_diff_hessian, finite_diff_jacobian, GRADIENT_STEP, HESSIAN_STEP};
use crate::numerics::optimize::{minimize, polish_quasi_newton, OptimizerOptions};

/// Objective value substituted for non-finite negative log-likelihoods, so
/// the simplex treats such points as infeasible instead of aborting.
const INFEASIBLE: f64 = 1e300;

/// Largest eigenvalue magnitude that still counts as PSD.
pub const PSD_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub optimizer: OptimizerOptions,
    /// Quasi-Newton polish after the simplex (smooth families only).
    pub polish: bool,
    /// Compute the sandwich covariance.
    pub covariance: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            optimizer: OptimizerOptions::default(),
            polish: true,
            covariance: true,
        }
    }
}

impl FitOptions {
    /// Point estimate only, with a tight initial simplex; meant for refits
    /// warm-started near the optimum (bootstrap, cross-validation).
    pub fn refit() -> Self {
        Self {
            optimizer: OptimizerOptions {
                initial_step: 0.05,
                ..OptimizerOptions::default()
            },
            polish: true,
            covariance: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub params: Params,
    pub loglik: f64,
    /// Sandwich covariance of `(β, log scale)`.
    pub covariance: Option<Vec<Vec<f64>>>,
    pub std_errors: Option<Vec<f64>>,
    pub covariance_psd: Option<bool>,
    /// Why the covariance is missing, when it was requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance_note: Option<String>,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub n: usize,
    pub squeezed: bool,
    /// Best log-likelihood after every optimizer iteration.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

/// Sandwich covariance with its PSD diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Sandwich {
    pub matrix: Vec<Vec<f64>>,
    pub min_eigenvalue: f64,
    pub psd: bool,
}

fn design(data: &Dataset) -> DMatrix<f64> {
    DMatrix::from_fn(data.n(), data.p() + 1, |i, j| if j == 0 { 1.0 } else { data.row(i)[j - 1] })
}

fn design_rank(x: &DMatrix<f64>) -> usize {
    let sv = x.clone().svd(false, false).singular_values;
    let top = sv.max();
    let tol = top * x.nrows().max(x.ncols()) as f64 * f64::EPSILON;
    sv.iter().filter(|&&s| s > tol).count()
}

/// Least-squares start on the link scale, with `log 10` (mode families) or a
/// moment-based `log φ` (`beta_mean`) for the scale.
pub fn starting_values(spec: &ModelSpec, data: &Dataset) -> Params {
    let x = design(data);
    let z = DVector::from_iterator(
        data.n(),
        data.y().iter().map(|&y| invert(spec.link, y.clamp(0.01, 0.99)).expect("clamped into (0,1)")),
    );
    let ten = 10f64.ln();
    let beta = if design_rank(&x) == x.ncols() {
        x.clone().svd(true, true).solve(&z, 1e-12).ok().map(|b| b.iter().copied().collect::<Vec<_>>())
    } else {
        None
    };
    let Some(beta) = beta.filter(|b| b.iter().all(|v| v.is_finite())) else {
        return Params::new(vec![0.0; data.p() + 1], ten);
    };
    let log_scale = match spec.family {
        Family::BetaMode | Family::GbpMode => ten,
        Family::BetaMean => {
            let n = data.n() as f64;
            let mut spread = 0.0;
            let mut resid = 0.0;
            for i in 0..data.n() {
                let mu = apply(spec.link, super::model::linear_predictor(&beta, data.row(i)));
                spread += mu * (1.0 - mu);
                resid += (data.y()[i] - mu).powi(2);
            }
            let phi = (spread / n) / (resid / n) - 1.0;
            if phi > 0.0 && phi.is_finite() {
                phi.ln()
            } else {
                ten
            }
        }
    };
    Params::new(beta, log_scale)
}

/// Maximum-likelihood fit from [`starting_values`].
pub fn fit(spec: &ModelSpec, data: &Dataset, options: &FitOptions) -> Result<FitResult> {
    fit_from(spec, data, &starting_values(spec, data), options)
}

/// Maximum-likelihood fit from a caller-supplied start.
pub fn fit_from(spec: &ModelSpec, data: &Dataset, start: &Params, options: &FitOptions) -> Result<FitResult> {
    if start.beta.len() != data.p() + 1 {
        return Err(Error::DimensionMismatch {
            expected: data.p() + 1,
            got: start.beta.len(),
        });
    }
    let rank = design_rank(&design(data));
    if rank < data.p() + 1 {
        return Err(Error::RankDeficient {
            rank,
            columns: data.p() + 1,
        });
    }
    let objective = |v: &[f64]| {
        let (beta, log_scale) = v.split_at(v.len() - 1);
        let ll = log_likelihood_unchecked(spec, beta, log_scale[0], data);
        if ll.is_finite() {
            -ll
        } else {
            INFEASIBLE
        }
    };
    let x0 = start.to_vec();
    let simplex = minimize(objective, &x0, &options.optimizer)?;
    let mut trace: Vec<f64> = simplex.trace.iter().map(|v| -v).collect();
    let mut best = simplex.argmin.clone();
    let mut best_value = simplex.value;
    let mut evaluations = simplex.evaluations;
    let mut converged = simplex.converged;

    if spec.family.is_smooth() {
        if options.polish {
            let polished = polish_quasi_newton(objective, &best, 200)?;
            evaluations += polished.evaluations;
            if polished.value < best_value {
                best = polished.argmin;
                best_value = polished.value;
                trace.push(-best_value);
            }
        }
        let grad = finite_diff_gradient(objective, &best, GRADIENT_STEP)?;
        let sup = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        converged &= sup <= 1e-4 * (1.0 + best_value.abs());
    }
    if best_value >= INFEASIBLE {
        converged = false;
    }

    let params = Params::from_slice(&best)?;
    let mut result = FitResult {
        spec: *spec,
        loglik: -best_value,
        covariance: None,
        std_errors: None,
        covariance_psd: None,
        covariance_note: None,
        converged,
        iterations: simplex.iterations,
        evaluations,
        n: data.n(),
        squeezed: data.squeezed(),
        trace,
        params,
    };
    if options.covariance {
        match sandwich_cov(spec, &result.params, data) {
            Ok(s) => {
                result.std_errors = Some(s.matrix.iter().enumerate().map(|(i, r)| r[i].max(0.0).sqrt()).collect());
                result.covariance_psd = Some(s.psd);
                result.covariance = Some(s.matrix);
            }
            Err(e) => result.covariance_note = Some(e.to_string()),
        }
    }
    Ok(result)
}

/// Sandwich covariance `(1/n) A⁻¹ B A⁻ᵀ` of `(β, log scale)`, with
/// `A = −H/n` from the numerical Hessian `H` of the total log-likelihood and
/// `B = (1/n) Σ gᵢ gᵢᵀ` from per-observation numerical gradients.
pub fn sandwich_cov(spec: &ModelSpec, params: &Params, data: &Dataset) -> Result<Sandwich> {
    if params.beta.len() != data.p() + 1 {
        return Err(Error::DimensionMismatch {
            expected: data.p() + 1,
            got: params.beta.len(),
        });
    }
    let x = params.to_vec();
    let d = x.len();
    let n = data.n() as f64;
    let split = |v: &[f64]| -> (Vec<f64>, f64) { (v[..v.len() - 1].to_vec(), v[v.len() - 1]) };
    let hess = finite_diff_hessian(
        |v| {
            let (b, s) = split(v);
            log_likelihood_unchecked(spec, &b, s, data)
        },
        &x,
        HESSIAN_STEP,
    )?;
    let jac = finite_diff_jacobian(
        |v| {
            let (b, s) = split(v);
            observation_terms(spec, &b, s, data)
        },
        &x,
        GRADIENT_STEP,
    )?;
    let a = DMatrix::from_fn(d, d, |i, j| -hess[i][j] / n);
    let g = DMatrix::from_fn(jac.len(), d, |i, j| jac[i][j]);
    let b = g.transpose() * &g / n;

    let sv = a.clone().svd(false, false).singular_values;
    if !(sv.min() > sv.max() * 1e-14) {
        return Err(Error::Singular(format!(
            "information matrix is singular (singular values {:?})",
            sv.as_slice()
        )));
    }
    let a_inv = a
        .try_inverse()
        .ok_or_else(|| Error::Singular("information matrix is not invertible".into()))?;
    let cov = &a_inv * b * a_inv.transpose() / n;
    let sym = (&cov + cov.transpose()) * 0.5;
    if sym.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("sandwich covariance is not finite".into()));
    }
    let min_eigenvalue = sym.clone().symmetric_eigen().eigenvalues.min();
    Ok(Sandwich {
        matrix: (0..d).map(|i| (0..d).map(|j| sym[(i, j)]).collect()).collect(),
        min_eigenvalue,
        psd: min_eigenvalue >= -PSD_TOLERANCE,
    })
}

/// Fitted conditional law at one covariate row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalSummary {
    pub eta: f64,
    /// Conditional mode; `None` for a `beta_mean` fit whose shapes do not
    /// both exceed 1.
    pub theta: Option<f64>,
    pub mu: f64,
    pub sigma2: f64,
    pub dist: ConditionalDist,
}

/// Distribution implied by `params` at covariate row `row`.
pub fn conditional_dist(spec: &ModelSpec, params: &Params, row: &[f64]) -> ConditionalDist {
    let loc = apply(spec.link, params.linear_predictor(row));
    let scale = params.scale();
    match spec.family {
        Family::BetaMode => ConditionalDist::BetaMode { theta: loc, m: scale },
        Family::GbpMode => ConditionalDist::Gbp { theta: loc, m: scale },
        Family::BetaMean => ConditionalDist::BetaMean { mu: loc, phi: scale },
    }
}

pub fn conditional_summary(fit: &FitResult, x_new: &[f64]) -> Result<ConditionalSummary> {
    summarize(&fit.spec, &fit.params, x_new)
}

pub fn summarize(spec: &ModelSpec, params: &Params, x_new: &[f64]) -> Result<ConditionalSummary> {
    if x_new.len() + 1 != params.beta.len() {
        return Err(Error::DimensionMismatch {
            expected: params.beta.len() - 1,
            got: x_new.len(),
        });
    }
    let eta = params.linear_predictor(x_new);
    let dist = conditional_dist(spec, params, x_new);
    let built = dist.build()?;
    Ok(ConditionalSummary {
        eta,
        theta: built.mode().ok(),
        mu: built.mean(),
        sigma2: built.variance(),
        dist,
    })
}

/// One response per row of `data`, drawn from the model at `params`.
pub fn simulate_responses<R: rand::Rng + ?Sized>(
    spec: &ModelSpec,
    params: &Params,
    data: &Dataset,
    rng: &mut R,
) -> Result<Vec<f64>> {
    (0..data.n())
        .map(|i| Ok(conditional_dist(spec, params, data.row(i)).build()?.draw(rng)))
        .collect()
}
