//! Derivative-free minimization.
//!
//! The primary method is an adaptive Nelder–Mead simplex, which tolerates
//! objectives with kinks and discontinuous Hessians. A quasi-Newton polish
//! driven by central-difference gradients is available for smooth
//! objectives.

use serde::{Deserialize, Serialize};

use super::diff::finite_diff_gradient;
use crate::error::{domain, Error, Result};

/// Stopping rules for [`minimize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    /// Simplex iterations allowed per run (restarts get their own budget).
    pub max_iterations: usize,
    /// Spread of objective values over the simplex, relative to `max(1, |f|)`.
    pub objective_tolerance: f64,
    /// Sup-norm simplex radius, relative to `max(1, |x|)`.
    pub parameter_tolerance: f64,
    /// Number of fresh simplices built around the incumbent after the first run.
    pub restart_count: usize,
    /// Initial simplex edge along coordinate `j`, relative to `max(1, |x0_j|)`.
    #[serde(default = "default_initial_step")]
    pub initial_step: f64,
}

fn default_initial_step() -> f64 {
    0.1
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5_000,
            objective_tolerance: 1e-10,
            parameter_tolerance: 1e-8,
            restart_count: 1,
            initial_step: default_initial_step(),
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return domain("max_iterations must be at least 1");
        }
        if !(self.objective_tolerance > 0.0) || !(self.parameter_tolerance > 0.0) {
            return domain("optimizer tolerances must be strictly positive");
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return domain("initial simplex step must be finite and positive");
        }
        Ok(())
    }
}

/// Outcome of a minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub argmin: Vec<f64>,
    pub value: f64,
    /// True only when both tolerances were met on the final run.
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    /// Best objective value after every iteration; nonincreasing.
    pub trace: Vec<f64>,
}

struct Counted<F> {
    f: F,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        self.evaluations += 1;
        let v = (self.f)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteObjective {
                point: x.to_vec(),
                value: v,
            })
        }
    }
}

/// Minimizes `objective` from `x0` with Nelder–Mead plus restarts.
///
/// Deterministic for fixed inputs. The returned value never exceeds
/// `objective(x0)`. Any non-finite evaluation aborts with the offending point.
pub fn minimize<F>(objective: F, x0: &[f64], options: &OptimizerOptions) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    options.validate()?;
    if x0.is_empty() {
        return domain("minimize requires at least one parameter");
    }
    let mut counted = Counted {
        f: objective,
        evaluations: 0,
    };
    let mut best_x = x0.to_vec();
    let mut best_f = counted.eval(x0)?;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    for _run in 0..=options.restart_count {
        let run = nelder_mead(&mut counted, &best_x, best_f, options, &mut trace)?;
        iterations += run.iterations;
        converged = run.converged;
        if run.value <= best_f {
            best_f = run.value;
            best_x = run.x;
        }
    }
    Ok(Minimum {
        argmin: best_x,
        value: best_f,
        converged,
        iterations,
        evaluations: counted.evaluations,
        trace,
    })
}

struct Run {
    x: Vec<f64>,
    value: f64,
    converged: bool,
    iterations: usize,
}

fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    f: &mut Counted<F>,
    x0: &[f64],
    f0: f64,
    options: &OptimizerOptions,
    trace: &mut Vec<f64>,
) -> Result<Run> {
    let dim = x0.len();
    let n = dim as f64;
    // Adaptive coefficients (Gao & Han) for dim >= 2; classic values in 1-D.
    let (alpha, gamma, rho, sigma) = if dim >= 2 {
        (1.0, 1.0 + 2.0 / n, 0.75 - 1.0 / (2.0 * n), 1.0 - 1.0 / n)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), f0));
    for j in 0..dim {
        let mut x = x0.to_vec();
        x[j] += options.initial_step * x0[j].abs().max(1.0);
        let fx = f.eval(&x)?;
        simplex.push((x, fx));
    }

    let mut centroid = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        let f_scale = best.abs().max(1.0);
        let x_scale = simplex[0].0.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let radius = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if worst - best <= options.objective_tolerance * f_scale
            && radius <= options.parameter_tolerance * x_scale
        {
            converged = true;
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (x, _) in &simplex[..dim] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n;
            }
        }
        let worst_x = simplex[dim].0.clone();
        let point = |coef: f64, out: &mut Vec<f64>| {
            for ((o, c), w) in out.iter_mut().zip(&centroid).zip(&worst_x) {
                *o = c + coef * (c - w);
            }
        };

        point(alpha, &mut trial);
        let reflected = trial.clone();
        let f_reflected = f.eval(&reflected)?;
        if f_reflected < best {
            point(alpha * gamma, &mut trial);
            let f_expanded = f.eval(&trial)?;
            simplex[dim] = if f_expanded < f_reflected {
                (trial.clone(), f_expanded)
            } else {
                (reflected, f_reflected)
            };
        } else if f_reflected < simplex[dim - 1].1 {
            simplex[dim] = (reflected, f_reflected);
        } else {
            let outside = f_reflected < worst;
            if outside {
                point(alpha * rho, &mut trial);
            } else {
                point(-rho, &mut trial);
            }
            let f_contracted = f.eval(&trial)?;
            let accept = if outside {
                f_contracted <= f_reflected
            } else {
                f_contracted < worst
            };
            if accept {
                simplex[dim] = (trial.clone(), f_contracted);
            } else {
                let anchor = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    for (v, a) in entry.0.iter_mut().zip(&anchor) {
                        *v = a + sigma * (*v - a);
                    }
                    entry.1 = f.eval(&entry.0)?;
                }
            }
        }
        let current_best = simplex.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        trace.push(current_best.min(trace.last().copied().unwrap_or(f64::INFINITY)));
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Ok(Run {
        x,
        value,
        converged,
        iterations,
    })
}

/// BFGS refinement of a point using central-difference gradients.
///
/// Intended for smooth objectives after a simplex search. Returns the
/// starting point unchanged when no descent step improves the objective.
pub fn polish_quasi_newton<F>(objective: F, x0: &[f64], max_iterations: usize) -> Result<Minimum>
where
    F: Fn(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut evaluations = 0usize;
    let eval = |x: &[f64], evaluations: &mut usize| -> Result<f64> {
        *evaluations += 1;
        let v = objective(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteObjective {
                point: x.to_vec(),
                value: v,
            })
        }
    };
    let grad = |x: &[f64], evaluations: &mut usize| -> Result<Vec<f64>> {
        *evaluations += 2 * x.len();
        finite_diff_gradient(&objective, x, 1e-5)
    };

    let mut x = x0.to_vec();
    let mut fx = eval(&x, &mut evaluations)?;
    let mut g = grad(&x, &mut evaluations)?;
    let mut h_inv = identity(dim);
    let mut trace = vec![fx];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        iterations += 1;
        let mut dir: Vec<f64> = mat_vec(&h_inv, &g).into_iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            h_inv = identity(dim);
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&g, &dir);
            if !(slope < 0.0) {
                converged = true;
                break;
            }
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let candidate: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let value = objective(&candidate);
            evaluations += 1;
            if value.is_finite() && value <= fx + 1e-4 * step * slope {
                accepted = Some((candidate, value));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            converged = true;
            break;
        };
        let g_new = grad(&x_new, &mut evaluations)?;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let improvement = fx - f_new;
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if iterations == 1 {
                let scale = sy / dot(&y, &y);
                h_inv = identity(dim).into_iter().map(|r| r.into_iter().map(|v| v * scale).collect()).collect();
            }
            bfgs_update(&mut h_inv, &s, &y, sy);
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        trace.push(fx);
        if improvement <= 1e-14 * fx.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    Ok(Minimum {
        argmin: x,
        value: fx,
        converged,
        iterations,
        evaluations,
        trace,
    })
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    let rho = 1.0 / sy;
    for i in 0..n {
        for j in 0..n {
            h[i][j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
        }
    }
}
