//! Mode-based and mean-based prediction intervals, cross-validated
//! coverage, and fixed-width interval comparisons.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{AnyDist, BoundedDistribution};
use crate::error::{domain, Error, Result};
use crate::numerics::rng::RngStream;
use crate::regression::{fit, fit_from, summarize, Dataset, FitOptions, FitResult, ModelSpec, Params};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    ModeBased,
    MeanBased,
    FixedWidthMode,
    FixedWidthMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: f64,
    /// Nominal mass `q`, or the multiplier `k` for fixed-width intervals.
    pub nominal_q: f64,
    pub kind: IntervalKind,
    /// An endpoint was cut at the support boundary.
    pub truncated: bool,
}

impl PredictionInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, y: f64) -> bool {
        self.lower <= y && y <= self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvScheme {
    LeaveOneOut,
    KFold,
}

/// Cross-validated coverage and mean width of the mode- and mean-centred
/// intervals at one nominal level (or one fixed-width multiplier).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// `q` for density-based intervals, `k` for fixed-width intervals.
    pub nominal: f64,
    pub coverage_mode: f64,
    pub coverage_mean: f64,
    pub width_mode: f64,
    pub width_mean: f64,
    pub scheme: CvScheme,
    pub folds: usize,
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        domain(format!("nominal coverage must lie in (0,1), got {q}"))
    }
}

/// Root of a monotone `g` on `[a, b]` with `g(a)`, `g(b)` of opposite sign
/// (Illinois variant of regula falsi, falling back to bisection steps).
fn solve_monotone(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, x_tol: f64, g_tol: f64) -> f64 {
    let mut ga = g(a);
    let mut gb = g(b);
    if ga == 0.0 {
        return a;
    }
    if gb == 0.0 {
        return b;
    }
    let mut side = 0i8;
    for iter in 0..200 {
        let mut x = (a * gb - b * ga) / (gb - ga);
        if !(x > a.min(b) && x < a.max(b)) || iter % 8 == 7 {
            x = 0.5 * (a + b);
        }
        let gx = g(x);
        if gx.abs() <= g_tol || (b - a).abs() <= x_tol {
            return x;
        }
        if (gx > 0.0) == (gb > 0.0) {
            b = x;
            gb = gx;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        } else {
            a = x;
            ga = gx;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        }
    }
    0.5 * (a + b)
}

/// Level-set endpoints `{v : f(v) ≥ λ}` of a unimodal density with mode `theta`.
fn level_set(d: &AnyDist, theta: f64, lambda: f64) -> (f64, f64, bool) {
    let mut truncated = false;
    let lower = if d.density(0.0) >= lambda {
        truncated = true;
        0.0
    } else {
        solve_monotone(|v| d.density(v) - lambda, 0.0, theta, 1e-15, 0.0)
    };
    let upper = if d.density(1.0) >= lambda {
        truncated = true;
        1.0
    } else {
        solve_monotone(|v| lambda - d.density(v), theta, 1.0, 1e-15, 0.0)
    };
    (lower, upper, truncated)
}

/// Highest-density interval of mass `q` for a unimodal distribution.
pub fn highest_density_interval(d: &AnyDist, q: f64) -> Result<PredictionInterval> {
    check_q(q)?;
    let theta = d.mode()?;
    let peak = d.density(theta);
    if !peak.is_finite() {
        return Err(Error::Unsupported("highest-density interval needs a bounded density".into()));
    }
    let mass = |lambda: f64| {
        let (lo, hi, _) = level_set(d, theta, lambda);
        d.cdf_unchecked(hi) - d.cdf_unchecked(lo)
    };
    let lambda = solve_monotone(|t| mass(t) - q, 0.0, peak, 1e-15 * peak, 1e-11);
    let (lower, upper, truncated) = level_set(d, theta, lambda);
    let (lower, upper) = if truncated {
        // one end sits on the boundary: solve the other for exact mass
        if lower == 0.0 && upper < 1.0 {
            (0.0, d.quantile_unchecked(q))
        } else if upper == 1.0 && lower > 0.0 {
            (d.quantile_unchecked(1.0 - q), 1.0)
        } else {
            (lower, upper)
        }
    } else {
        (lower, upper)
    };
    Ok(PredictionInterval {
        lower,
        upper,
        nominal_q: q,
        kind: IntervalKind::ModeBased,
        truncated,
    })
}

/// Mean-anchored interval of mass `q`: the mode interval when it contains
/// `μ`, otherwise an interval with `μ` as the endpoint nearer the mode.
pub fn mean_anchored_interval(d: &AnyDist, q: f64, mode_interval: &PredictionInterval) -> Result<PredictionInterval> {
    check_q(q)?;
    let mu = d.mean();
    if mode_interval.contains(mu) {
        return Ok(PredictionInterval {
            kind: IntervalKind::MeanBased,
            ..*mode_interval
        });
    }
    let theta = d.mode()?;
    let f_mu = d.cdf_unchecked(mu);
    let (lower, upper, truncated) = if mu >= theta {
        if f_mu >= q {
            (d.quantile_unchecked(f_mu - q), mu, false)
        } else {
            (0.0, mu, true)
        }
    } else if f_mu + q <= 1.0 {
        (mu, d.quantile_unchecked(f_mu + q), false)
    } else {
        (mu, 1.0, true)
    };
    Ok(PredictionInterval {
        lower,
        upper,
        nominal_q: q,
        kind: IntervalKind::MeanBased,
        truncated,
    })
}

fn dist_at(spec: &ModelSpec, params: &Params, x: &[f64]) -> Result<AnyDist> {
    summarize(spec, params, x)?.dist.build()
}

/// Highest-density (mode-based) prediction interval at `x_new`.
pub fn mode_interval(fit: &FitResult, x_new: &[f64], q: f64) -> Result<PredictionInterval> {
    highest_density_interval(&dist_at(&fit.spec, &fit.params, x_new)?, q)
}

/// Mean-based prediction interval at `x_new`.
pub fn mean_interval(fit: &FitResult, x_new: &[f64], q: f64) -> Result<PredictionInterval> {
    let d = dist_at(&fit.spec, &fit.params, x_new)?;
    let mode = highest_density_interval(&d, q)?;
    mean_anchored_interval(&d, q, &mode)
}

/// Both intervals at every `q`, sharing the mode-interval computation.
fn interval_pairs(d: &AnyDist, q_grid: &[f64]) -> Result<Vec<(PredictionInterval, PredictionInterval)>> {
    q_grid
        .iter()
        .map(|&q| {
            let mode = highest_density_interval(d, q)?;
            let mean = mean_anchored_interval(d, q, &mode)?;
            Ok((mode, mean))
        })
        .collect()
}

#[derive(Default, Clone)]
struct Tally {
    hits_mode: usize,
    hits_mean: usize,
    width_mode: f64,
    width_mean: f64,
}

fn reports(tallies: Vec<Tally>, nominal: &[f64], n: usize, scheme: CvScheme, folds: usize) -> Vec<CoverageReport> {
    let nf = n as f64;
    tallies
        .into_iter()
        .zip(nominal)
        .map(|(t, &q)| CoverageReport {
            nominal: q,
            coverage_mode: t.hits_mode as f64 / nf,
            coverage_mean: t.hits_mean as f64 / nf,
            width_mode: t.width_mode / nf,
            width_mean: t.width_mean / nf,
            scheme,
            folds,
        })
        .collect()
}

fn accumulate(tallies: &mut [Tally], y: f64, pairs: &[(PredictionInterval, PredictionInterval)]) {
    for (t, (mode, mean)) in tallies.iter_mut().zip(pairs) {
        t.hits_mode += usize::from(mode.contains(y));
        t.hits_mean += usize::from(mean.contains(y));
        t.width_mode += mode.width();
        t.width_mean += mean.width();
    }
}

fn point_fit(spec: &ModelSpec, data: &Dataset) -> Result<FitResult> {
    let options = FitOptions {
        covariance: false,
        ..FitOptions::default()
    };
    let full = fit(spec, data, &options)?;
    if !full.converged {
        return Err(Error::NotConverged("full-data fit".into()));
    }
    Ok(full)
}

/// Parameters refitted without each observation in turn, warm-started at
/// `start`.
pub fn leave_one_out_params(spec: &ModelSpec, data: &Dataset, start: &Params) -> Result<Vec<Params>> {
    (0..data.n())
        .into_par_iter()
        .map(|i| {
            let refit = fit_from(spec, &data.without(i)?, start, &FitOptions::refit())
                .map_err(|e| Error::NotConverged(format!("leave-one-out refit without row {i}: {e}")))?;
            if !refit.converged {
                return Err(Error::NotConverged(format!("leave-one-out refit without row {i}")));
            }
            Ok(refit.params)
        })
        .collect()
}

fn check_grid(q_grid: &[f64]) -> Result<()> {
    if q_grid.is_empty() {
        return domain("empty nominal grid");
    }
    q_grid.iter().try_for_each(|&q| check_q(q))
}

/// Leave-one-out coverage of mode- and mean-based intervals at each `q`.
pub fn loo_coverage(spec: &ModelSpec, data: &Dataset, q_grid: &[f64]) -> Result<Vec<CoverageReport>> {
    check_grid(q_grid)?;
    let full = point_fit(spec, data)?;
    let params = leave_one_out_params(spec, data, &full.params)?;
    loo_coverage_from_params(spec, data, q_grid, &params)
}

/// Leave-one-out coverage given precomputed leave-one-out parameters.
pub fn loo_coverage_from_params(
    spec: &ModelSpec,
    data: &Dataset,
    q_grid: &[f64],
    loo_params: &[Params],
) -> Result<Vec<CoverageReport>> {
    check_grid(q_grid)?;
    if loo_params.len() != data.n() {
        return Err(Error::DimensionMismatch {
            expected: data.n(),
            got: loo_params.len(),
        });
    }
    let per_unit: Vec<Vec<(PredictionInterval, PredictionInterval)>> = (0..data.n())
        .into_par_iter()
        .map(|i| interval_pairs(&dist_at(spec, &loo_params[i], data.row(i))?, q_grid))
        .collect::<Result<_>>()?;
    let mut tallies = vec![Tally::default(); q_grid.len()];
    for (i, pairs) in per_unit.iter().enumerate() {
        accumulate(&mut tallies, data.y()[i], pairs);
    }
    Ok(reports(tallies, q_grid, data.n(), CvScheme::LeaveOneOut, data.n()))
}

/// `folds`-fold coverage; units are assigned to folds by a random
/// permutation drawn from `stream`, fold sizes differing by at most one.
pub fn kfold_coverage(
    spec: &ModelSpec,
    data: &Dataset,
    q_grid: &[f64],
    folds: usize,
    stream: RngStream,
) -> Result<Vec<CoverageReport>> {
    check_grid(q_grid)?;
    if folds < 2 {
        return domain(format!("need at least 2 folds, got {folds}"));
    }
    if data.n() < folds * (data.p() + 2) {
        return domain(format!(
            "n = {} is too small for {folds} folds with {} parameters",
            data.n(),
            data.p() + 2
        ));
    }
    let assignment = fold_assignment(data.n(), folds, stream);
    let full = point_fit(spec, data)?;
    let per_fold: Vec<Vec<(usize, Vec<(PredictionInterval, PredictionInterval)>)>> = (0..folds)
        .into_par_iter()
        .map(|k| {
            let train: Vec<usize> = (0..data.n()).filter(|&i| assignment[i] != k).collect();
            let refit = fit_from(spec, &data.subset(&train)?, &full.params, &FitOptions::refit())?;
            if !refit.converged {
                return Err(Error::NotConverged(format!("refit without fold {k}")));
            }
            (0..data.n())
                .filter(|&i| assignment[i] == k)
                .map(|i| Ok((i, interval_pairs(&dist_at(spec, &refit.params, data.row(i))?, q_grid)?)))
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut tallies = vec![Tally::default(); q_grid.len()];
    for (i, pairs) in per_fold.iter().flatten() {
        accumulate(&mut tallies, data.y()[*i], pairs);
    }
    Ok(reports(tallies, q_grid, data.n(), CvScheme::KFold, folds))
}

/// Fold index of every unit.
pub fn fold_assignment(n: usize, folds: usize, stream: RngStream) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream.generator());
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

/// Fixed-width intervals `θ̂ ± kσ̂` and `μ̂ ± kσ̂` for every row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedWidthIntervals {
    pub mode: Vec<PredictionInterval>,
    pub mean: Vec<PredictionInterval>,
    /// `[n⁻¹ Σ (yᵢ − μ̂ᵢ)²]^{1/2}` on the full fit.
    pub sigma_hat: f64,
    /// Unclipped width `2kσ̂` shared by both families.
    pub width: f64,
}

/// Root-mean-square residual about the fitted conditional means.
pub fn mean_residual_sd(spec: &ModelSpec, params: &Params, data: &Dataset) -> Result<f64> {
    let mut ss = 0.0;
    for i in 0..data.n() {
        let mu = summarize(spec, params, data.row(i))?.mu;
        ss += (data.y()[i] - mu).powi(2);
    }
    Ok((ss / data.n() as f64).sqrt())
}

fn centred(centre: f64, half: f64, k: f64, kind: IntervalKind) -> PredictionInterval {
    let (lo, hi) = (centre - half, centre + half);
    PredictionInterval {
        lower: lo.max(0.0),
        upper: hi.min(1.0),
        nominal_q: k,
        kind,
        truncated: lo < 0.0 || hi > 1.0,
    }
}

fn check_k(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        domain(format!("width multiplier must be finite and > 0, got {k}"))
    }
}

/// Mode- and mean-centred intervals `θ̂(x) ± kσ̂` and `μ̂(x) ± kσ̂`, clipped
/// to `[0,1]`.
pub fn fixed_width_pair(
    spec: &ModelSpec,
    params: &Params,
    x: &[f64],
    sigma_hat: f64,
    k: f64,
) -> Result<(PredictionInterval, PredictionInterval)> {
    check_k(k)?;
    let s = summarize(spec, params, x)?;
    let theta = s
        .theta
        .ok_or_else(|| Error::Unsupported("fitted distribution has no interior mode".into()))?;
    let half = k * sigma_hat;
    Ok((
        centred(theta, half, k, IntervalKind::FixedWidthMode),
        centred(s.mu, half, k, IntervalKind::FixedWidthMean),
    ))
}

/// Fixed-width intervals of common width `2kσ̂` at every row of `data`.
pub fn fixed_width_intervals(fit: &FitResult, data: &Dataset, k: f64) -> Result<FixedWidthIntervals> {
    check_k(k)?;
    let sigma_hat = mean_residual_sd(&fit.spec, &fit.params, data)?;
    let (mode, mean) = (0..data.n())
        .map(|i| fixed_width_pair(&fit.spec, &fit.params, data.row(i), sigma_hat, k))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    Ok(FixedWidthIntervals {
        mode,
        mean,
        sigma_hat,
        width: 2.0 * k * sigma_hat,
    })
}

/// Leave-one-out coverage of fixed-width intervals. Centres come from the
/// fit without unit `i`; `σ̂` comes from the full-data fit.
pub fn fixed_width_loo_coverage(spec: &ModelSpec, data: &Dataset, k_grid: &[f64]) -> Result<Vec<CoverageReport>> {
    if k_grid.is_empty() {
        return domain("empty multiplier grid");
    }
    k_grid.iter().try_for_each(|&k| check_k(k))?;
    let full = point_fit(spec, data)?;
    let sigma_hat = mean_residual_sd(spec, &full.params, data)?;
    let loo = leave_one_out_params(spec, data, &full.params)?;
    let mut tallies = vec![Tally::default(); k_grid.len()];
    for (i, params) in loo.iter().enumerate() {
        let pairs = k_grid
            .iter()
            .map(|&k| fixed_width_pair(spec, params, data.row(i), sigma_hat, k))
            .collect::<Result<Vec<_>>>()?;
        accumulate(&mut tallies, data.y()[i], &pairs);
    }
    Ok(reports(tallies, k_grid, data.n(), CvScheme::LeaveOneOut, data.n()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{BetaModeDist, GbpDist};

    #[test]
    fn beta22_half_mass_interval() {
        let d = AnyDist::BetaMode(BetaModeDist::new(0.5, 2.0).unwrap());
        let pi = highest_density_interval(&d, 0.5).unwrap();
        assert!((pi.lower - 0.326_351_822).abs() < 1e-6, "{pi:?}");
        assert!((pi.upper - 0.673_648_178).abs() < 1e-6);
        assert!((d.density(pi.lower) - d.density(pi.upper)).abs() < 1e-9);
    }

    #[test]
    fn mass_and_equal_density() {
        for d in [
            AnyDist::Gbp(GbpDist::new(0.2, 10.0).unwrap()),
            AnyDist::Gbp(GbpDist::new(0.9, 1.5).unwrap()),
            AnyDist::BetaMode(BetaModeDist::new(0.75, 80.0).unwrap()),
        ] {
            for &q in &[0.01, 0.1, 0.5, 0.9, 0.99] {
                let pi = highest_density_interval(&d, q).unwrap();
                let mass = d.cdf_unchecked(pi.upper) - d.cdf_unchecked(pi.lower);
                assert!((mass - q).abs() <= 1e-6, "{d:?} q={q} mass={mass}");
                let (fl, fu) = (d.density(pi.lower), d.density(pi.upper));
                assert!((fl - fu).abs() <= 1e-6 * fl.max(fu), "{d:?} q={q}");
            }
        }
    }

    #[test]
    fn mean_interval_anchors_at_mean() {
        let d = AnyDist::Gbp(GbpDist::new(0.2, 10.0).unwrap());
        let mode = highest_density_interval(&d, 0.05).unwrap();
        let mean = mean_anchored_interval(&d, 0.05, &mode).unwrap();
        assert!(!mode.contains(d.mean()));
        assert_eq!(mean.upper, d.mean());
        let mass = d.cdf_unchecked(mean.upper) - d.cdf_unchecked(mean.lower);
        assert!((mass - 0.05).abs() < 1e-9);
        let wide = highest_density_interval(&d, 0.8).unwrap();
        let reuse = mean_anchored_interval(&d, 0.8, &wide).unwrap();
        assert_eq!((reuse.lower, reuse.upper), (wide.lower, wide.upper));
    }

    #[test]
    fn rejects_bad_q() {
        let d = AnyDist::Gbp(GbpDist::new(0.5, 3.0).unwrap());
        assert!(highest_density_interval(&d, 0.0).is_err());
        assert!(highest_density_interval(&d, 1.0).is_err());
    }

    #[test]
    fn folds_are_balanced() {
        let f = fold_assignment(23, 5, RngStream::new(3, 0));
        let mut counts = [0usize; 5];
        f.iter().for_each(|&k| counts[k] += 1);
        assert!(counts.iter().all(|&c| c == 4 || c == 5));
        assert_eq!(f, fold_assignment(23, 5, RngStream::new(3, 0)));
    }
}
