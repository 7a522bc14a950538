//! The geometric mean as the free-energy minimizer on a fixed-product manifold.
//!
//! Minimizes `F(y‖1) = Σ y_i (ln y_i - 1) + n` subject to `Π y_i = Π x_i`.
//! In `u = ln y` the constraint is the hyperplane `Σ u_i = Σ ln x_i`, so the
//! descent below stays exactly feasible.

use crate::error::{check_len, check_positive, Error, Result};

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct GmVariationalSolution {
    pub y_star: Vec<f64>,
    pub lagrange_multiplier: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
}

#[cfg(test)]
fn objective(u: &[f64]) -> f64 {
    u.iter().map(|v| v.exp() * (v - 1.0)).sum::<f64>() + u.len() as f64
}

// F(e^{u+s}) - F(e^u) summed termwise without cancelling the leading parts.
fn objective_change(u: &[f64], next: &[f64]) -> f64 {
    u.iter()
        .zip(next)
        .map(|(a, b)| {
            let s = b - a;
            a.exp() * (s.exp_m1() * (a - 1.0) + s.exp() * s)
        })
        .sum()
}

fn restore_sum(u: &mut [f64], target: f64) {
    let shift = (target - u.iter().sum::<f64>()) / u.len() as f64;
    u.iter_mut().for_each(|x| *x += shift);
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Projected descent in log coordinates. `observe` sees every accepted
/// iterate `u` together with the objective change along the hyperplane that
/// produced it.
fn descend(
    x: &[f64],
    tol: f64,
    max_iter: usize,
    mut observe: impl FnMut(&[f64], f64),
) -> Result<(Vec<f64>, usize)> {
    let target: f64 = x.iter().map(|v| v.ln()).sum();
    let mut u: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let n = u.len();
    observe(&u, 0.0);
    let mut trial = vec![0.0; n];

    for iter in 0..=max_iter {
        let grad: Vec<f64> = u.iter().map(|v| v * v.exp()).collect();
        let normal = grad.iter().sum::<f64>() / n as f64;
        let pg: Vec<f64> = grad.iter().map(|g| g - normal).collect();
        if inf_norm(&pg) <= tol {
            return Ok((u, iter));
        }
        if iter == max_iter {
            break;
        }

        // Diagonal-Newton direction restricted to the hyperplane when the
        // curvature (1 + u) e^u is positive everywhere, else steepest descent.
        let curv: Vec<f64> = u.iter().map(|v| (1.0 + v) * v.exp()).collect();
        let mut dir: Vec<f64> = if curv.iter().all(|h| *h > 1e-8) {
            let inv_sum: f64 = curv.iter().map(|h| 1.0 / h).sum();
            let mu = grad.iter().zip(&curv).map(|(g, h)| g / h).sum::<f64>() / inv_sum;
            grad.iter().zip(&curv).map(|(g, h)| -(g - mu) / h).collect()
        } else {
            pg.iter().map(|g| -g).collect()
        };
        let dir_mean = dir.iter().sum::<f64>() / n as f64;
        dir.iter_mut().for_each(|d| *d -= dir_mean);
        let slope: f64 = dir.iter().zip(&pg).map(|(d, g)| d * g).sum();
        if !(slope < 0.0) {
            break;
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for ((t, a), d) in trial.iter_mut().zip(&u).zip(&dir) {
                *t = a + step * d;
            }
            restore_sum(&mut trial, target);
            // Restoring the sum moves off the hyperplane by round-off only; the
            // first-order cost of that drift is removed so it cannot mask the
            // tangential decrease near the optimum.
            let drift: f64 = trial.iter().zip(&u).map(|(b, a)| b - a).sum();
            let change = objective_change(&u, &trial) - normal * drift;
            if change.is_finite() && change <= ARMIJO_C * step * slope {
                accepted = Some(change);
                break;
            }
            step *= 0.5;
        }
        let Some(change) = accepted else { break };
        std::mem::swap(&mut u, &mut trial);
        observe(&u, change);
    }
    Err(Error::NoConvergence(max_iter))
}

/// Minimizer of `F(y‖1)` subject to `Π y = Π x`, which is `gm(x)·1`.
///
/// A stationary point that is not a consensus vector (possible when
/// `gm(x) < 1/e`, where consensus is no longer the minimum) is reported as
/// `NoConvergence`.
pub fn solve_gm_variational(x: &[f64], tol: f64, max_iter: usize) -> Result<GmVariationalSolution> {
    check_positive(x)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {tol}")));
    }
    let (u, iterations) = descend(x, tol, max_iter, |_, _| {})?;
    let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo > (1e3 * tol).max(1e-6) {
        return Err(Error::NoConvergence(iterations));
    }
    let y_star: Vec<f64> = u.iter().map(|v| v.exp()).collect();
    let lagrange_multiplier = recover_multiplier(&y_star)?;
    let kkt_residual = kkt_residual(&y_star, lagrange_multiplier, x)?;
    Ok(GmVariationalSolution { y_star, lagrange_multiplier, kkt_residual, iterations })
}

/// `λ` from the stationarity equation of the largest component.
pub fn recover_multiplier(y: &[f64]) -> Result<f64> {
    check_positive(y)?;
    let k = (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap_or(0);
    let log_others: f64 = y.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, v)| v.ln()).sum();
    Ok(y[k].ln() / log_others.exp())
}

/// Largest of the feasibility residual `|1 - Πy/Πx|` and the stationarity
/// residuals `|ln y_i - λ Π_{j≠i} y_j|`.
pub fn kkt_residual(y: &[f64], lambda: f64, x: &[f64]) -> Result<f64> {
    check_positive(y)?;
    check_positive(x)?;
    check_len(x.len(), y.len())?;
    let log_y: f64 = y.iter().map(|v| v.ln()).sum();
    let log_x: f64 = x.iter().map(|v| v.ln()).sum();
    let feasibility = (1.0 - (log_y - log_x).exp()).abs();
    let stationarity = y
        .iter()
        .map(|v| (v.ln() - lambda * (log_y - v.ln()).exp()).abs())
        .fold(0.0, f64::max);
    Ok(feasibility.max(stationarity))
}

/// `max_i y_i ln y_i - min_i y_i ln y_i`; zero exactly on consensus vectors
/// when `y ln y` is injective over the components.
pub fn solution_characteristic_residual(y: &[f64]) -> Result<f64> {
    check_positive(y)?;
    let vals = y.iter().map(|v| v * v.ln());
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok(hi - lo)
}
