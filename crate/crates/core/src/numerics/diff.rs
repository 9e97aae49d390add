//! Finite-difference derivatives.
//!
//! Steps are relative: coordinate `j` uses `h · max(1, |x_j|)`.

use crate::error::{domain, Error, Result};

/// Default relative step for gradients.
pub const GRADIENT_STEP: f64 = 1e-5;
/// Default relative step for Hessians.
pub const HESSIAN_STEP: f64 = 1e-4;

/// Which side of a point a one-sided difference samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[inline]
fn step(h: f64, x: f64) -> f64 {
    h * x.abs().max(1.0)
}

fn checked(v: f64, x: &[f64]) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteObjective {
            point: x.to_vec(),
            value: v,
        })
    }
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        domain(format!("finite-difference step must be positive, got {h}"))
    }
}

/// Central-difference gradient.
pub fn finite_diff_gradient<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    check_step(h)?;
    let mut work = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let hj = step(h, x[j]);
        work[j] = x[j] + hj;
        let up = checked(f(&work), &work)?;
        work[j] = x[j] - hj;
        let down = checked(f(&work), &work)?;
        work[j] = x[j];
        grad.push((up - down) / (2.0 * hj));
    }
    Ok(grad)
}

/// Central-difference Jacobian of a vector-valued map, returned as
/// `rows = outputs`, `columns = inputs`.
pub fn finite_diff_jacobian<F>(f: F, x: &[f64], h: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    check_step(h)?;
    let mut work = x.to_vec();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let hj = step(h, x[j]);
        work[j] = x[j] + hj;
        let up = f(&work);
        work[j] = x[j] - hj;
        let down = f(&work);
        work[j] = x[j];
        if up.len() != down.len() {
            return Err(Error::DimensionMismatch {
                expected: up.len(),
                got: down.len(),
            });
        }
        let col: Vec<f64> = up.iter().zip(&down).map(|(u, d)| (u - d) / (2.0 * hj)).collect();
        if let Some(bad) = col.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFiniteObjective {
                point: x.to_vec(),
                value: *bad,
            });
        }
        columns.push(col);
    }
    let rows = columns.first().map_or(0, Vec::len);
    Ok((0..rows)
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect())
}

/// Central-difference Hessian (symmetric by construction).
pub fn finite_diff_hessian<F>(f: F, x: &[f64], h: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> f64,
{
    check_step(h)?;
    let n = x.len();
    let f0 = checked(f(x), x)?;
    let steps: Vec<f64> = x.iter().map(|&v| step(h, v)).collect();
    let mut work = x.to_vec();
    let eval = |work: &mut Vec<f64>, shifts: &[(usize, f64)]| -> Result<f64> {
        for &(j, s) in shifts {
            work[j] = x[j] + s;
        }
        let v = checked(f(work), work);
        for &(j, _) in shifts {
            work[j] = x[j];
        }
        v
    };
    let mut hess = vec![vec![0.0; n]; n];
    for i in 0..n {
        let hi = steps[i];
        let up = eval(&mut work, &[(i, hi)])?;
        let down = eval(&mut work, &[(i, -hi)])?;
        hess[i][i] = (up - 2.0 * f0 + down) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let pp = eval(&mut work, &[(i, hi), (j, hj)])?;
            let pm = eval(&mut work, &[(i, hi), (j, -hj)])?;
            let mp = eval(&mut work, &[(i, -hi), (j, hj)])?;
            let mm = eval(&mut work, &[(i, -hi), (j, -hj)])?;
            let v = (pp - pm - mp + mm) / (4.0 * hi * hj);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    Ok(hess)
}

/// One-sided first derivative, second-order accurate.
pub fn one_sided_derivative<F>(f: F, x: f64, h: f64, side: Side) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    check_step(h)?;
    let s = match side {
        Side::Left => -step(h, x),
        Side::Right => step(h, x),
    };
    let f0 = checked(f(x), &[x])?;
    let f1 = checked(f(x + s), &[x + s])?;
    let f2 = checked(f(x + 2.0 * s), &[x + 2.0 * s])?;
    Ok((-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * s))
}

/// One-sided second derivative `lim f''(x ± 0)`, second-order accurate.
///
/// Samples only `x` and points strictly on the requested side, so it
/// recovers directional limits across a jump in `f''`.
pub fn one_sided_second_derivative<F>(f: F, x: f64, h: f64, side: Side) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    check_step(h)?;
    let s = match side {
        Side::Left => -step(h, x),
        Side::Right => step(h, x),
    };
    let mut vals = [0.0; 4];
    for (k, v) in vals.iter_mut().enumerate() {
        let at = x + k as f64 * s;
        *v = checked(f(at), &[at])?;
    }
    Ok((2.0 * vals[0] - 5.0 * vals[1] + 4.0 * vals[2] - vals[3]) / (s * s))
}
