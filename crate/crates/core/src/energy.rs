//! Free energy, relative entropy, and projected-gradient structure of the flows.

use crate::dynamics::Trajectory;
use crate::error::{check_len, check_positive, check_positive_state, Error, Result};
use crate::graph::WeightedDigraph;
use crate::matrix::Matrix;

/// Slack for successive free-energy increases along a sampled trajectory.
pub const DESCENT_SLACK: f64 = 1e-9;

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// `F(x‖y) = Σ x_i (ln(x_i / y_i) - 1) + c`
pub fn free_energy(x: &[f64], y: &[f64], c: f64) -> Result<f64> {
    check_positive(x)?;
    check_positive(y)?;
    check_len(x.len(), y.len())?;
    Ok(x.iter().zip(y).map(|(a, b)| a * ((a / b).ln() - 1.0)).sum::<f64>() + c)
}

/// `F(x‖1)` with the constant `n`, so that the uniform unit vector has zero energy.
pub fn free_energy_unit(x: &[f64]) -> Result<f64> {
    check_positive(x)?;
    Ok(x.iter().map(|a| a * (a.ln() - 1.0)).sum::<f64>() + x.len() as f64)
}

/// `Σ x_i ln(x_i / y_i)` for probability vectors.
pub fn relative_entropy(x: &[f64], y: &[f64]) -> Result<f64> {
    check_positive(x)?;
    check_positive(y)?;
    check_len(x.len(), y.len())?;
    for v in [x, y] {
        let mass: f64 = v.iter().sum();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::NotProbabilityVector(mass));
        }
    }
    Ok(x.iter().zip(y).map(|(a, b)| a * (a / b).ln()).sum())
}

/// `L ∇F(x‖1) = L ln x`.
pub fn projected_gradient(l: &Matrix, x: &[f64]) -> Result<Vec<f64>> {
    check_len(l.dim(), x.len())?;
    check_positive_state(x)?;
    let ln_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    Ok(l.mul_vec(&ln_x))
}

/// Eigenpairs of a symmetric matrix by cyclic Jacobi rotations, sorted by
/// ascending eigenvalue. Column `k` of the returned matrix is the unit
/// eigenvector for eigenvalue `k`.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let scale = a.max_abs().max(1.0);
    if !a.is_symmetric(1e-12 * scale) {
        return Err(Error::NotSymmetric);
    }
    let n = a.dim();
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOL * scale * 1e-3 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let diag = m.diag();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&k| diag[k]).collect();
    let mut vecs = Matrix::zeros(n);
    for (col, &k) in order.iter().enumerate() {
        for r in 0..n {
            vecs[(r, col)] = v[(r, k)];
        }
    }
    Ok((values, vecs))
}

/// `‖L x - Σ_k λ_k v_k (v_k · x)‖∞` for a symmetric Laplacian of a connected graph.
///
/// Also checks that the spectrum is `0 = λ₁ < λ₂ ≤ …` with `v₁ ∝ 1`.
pub fn eigendecomposition_projection_residual(l: &Matrix, x: &[f64]) -> Result<f64> {
    check_len(l.dim(), x.len())?;
    let (values, vecs) = symmetric_eigen(l)?;
    let n = l.dim();
    let scale = l.max_abs().max(1.0);
    let tol = 1e-9 * scale;
    if values[0].abs() > tol {
        return Err(Error::NotConnected);
    }
    if n > 1 && values[1] <= tol {
        return Err(Error::NotConnected);
    }
    let first: Vec<f64> = (0..n).map(|r| vecs[(r, 0)]).collect();
    let expect = 1.0 / (n as f64).sqrt();
    if first.iter().any(|v| (v.abs() - expect).abs() > 1e-8) {
        return Err(Error::NotConnected);
    }

    let mut recon = vec![0.0; n];
    for k in 0..n {
        let col: Vec<f64> = (0..n).map(|r| vecs[(r, k)]).collect();
        let coeff = values[k] * col.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        for (r, c) in recon.iter_mut().zip(&col) {
            *r += coeff * c;
        }
    }
    let direct = l.mul_vec(x);
    Ok(direct.iter().zip(&recon).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

/// Free energy `F(x(t)‖1)` along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub monotone: bool,
    /// Largest positive successive difference, zero when non-increasing.
    pub max_uptick: f64,
}

impl EnergyReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,free_energy\n");
        for (t, f) in self.times.iter().zip(&self.values) {
            out.push_str(&format!("{t:.16e},{f:.16e}\n"));
        }
        out
    }
}

pub fn audit_energy_descent(traj: &Trajectory, g: &WeightedDigraph) -> Result<EnergyReport> {
    if traj.times.len() != traj.states.len() {
        return Err(Error::LengthMismatch { expected: traj.times.len(), actual: traj.states.len() });
    }
    let values = traj
        .states
        .iter()
        .map(|x| {
            check_len(g.n(), x.len())?;
            free_energy_unit(x)
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_uptick = values.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    Ok(EnergyReport {
        times: traj.times.clone(),
        values,
        monotone: max_uptick <= DESCENT_SLACK,
        max_uptick,
    })
}
