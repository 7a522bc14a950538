//! Mean functions on the positive reals.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{check_len, check_positive, Error, Result};

/// Default stopping tolerance for [`agm`].
pub const AGM_TOL: f64 = 1e-14;
const AGM_MAX_ITER: usize = 60;

/// Absolute tolerance of the adaptive Simpson rule used by [`elliptic_integral`].
pub const QUADRATURE_TOL: f64 = 1e-12;

/// Relative gap below which [`lgm`] returns the midpoint.
const LGM_NEAR_EQUAL: f64 = 1e-9;

/// Positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(w) = weights.iter().find(|&&w| !(w > 0.0)) {
            return Err(Error::InvalidWeights(format!("weight {w} is not positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
        }
        Ok(Self(weights))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<crate::graph::PerronVector> for WeightVector {
    fn from(q: crate::graph::PerronVector) -> Self {
        Self(q.into_inner())
    }
}

pub fn am(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(x.iter().sum::<f64>() / x.len() as f64)
}

pub fn gm(x: &[f64]) -> Result<f64> {
    check_positive(x)?;
    let mean_log = x.iter().map(|v| v.ln()).sum::<f64>() / x.len() as f64;
    Ok(clamp_to_range(mean_log.exp(), x))
}

pub fn am_w(x: &[f64], w: &WeightVector) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_len(w.0.len(), x.len())?;
    Ok(x.iter().zip(&w.0).map(|(v, w)| v * w).sum())
}

pub fn gm_w(x: &[f64], w: &WeightVector) -> Result<f64> {
    check_positive(x)?;
    check_len(w.0.len(), x.len())?;
    let log: f64 = x.iter().zip(&w.0).map(|(v, w)| w * v.ln()).sum();
    Ok(clamp_to_range(log.exp(), x))
}

// exp/ln round-off can leave a mean one ulp outside [min, max]
fn clamp_to_range(m: f64, x: &[f64]) -> f64 {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m.clamp(lo, hi)
}

/// Logarithmic mean `(a - b) / (ln a - ln b)`, extended by continuity to `a` at `a = b`.
pub fn lgm(a: f64, b: f64) -> Result<f64> {
    check_positive(&[a, b])?;
    Ok(lgm_unchecked(a, b))
}

pub(crate) fn lgm_unchecked(a: f64, b: f64) -> f64 {
    if (a - b).abs() <= LGM_NEAR_EQUAL * a.max(b) {
        return 0.5 * (a + b);
    }
    let m = (a - b) / (a.ln() - b.ln());
    m.clamp(a.min(b), a.max(b))
}

/// Arithmetic-geometric mean by Gauss' iteration.
pub fn agm(a: f64, b: f64, tol: f64) -> Result<f64> {
    let seq = agm_sequence(a, b, tol)?;
    let &(ak, bk) = seq.last().expect("sequence holds the initial pair");
    Ok(0.5 * (ak + bk))
}

/// The pairs `(a_k, b_k)` visited by the AGM iteration, starting with
/// `(max(a,b), min(a,b))`, until `|a_k - b_k| <= tol`.
pub fn agm_sequence(a: f64, b: f64, tol: f64) -> Result<Vec<(f64, f64)>> {
    check_positive(&[a, b])?;
    let (mut hi, mut lo) = (a.max(b), a.min(b));
    let mut seq = vec![(hi, lo)];
    for _ in 0..AGM_MAX_ITER {
        if hi - lo <= tol {
            break;
        }
        let next_hi = 0.5 * (hi + lo);
        let next_lo = (hi * lo).sqrt();
        // the pair cannot cross in exact arithmetic
        let (h, l) = (next_hi.max(next_lo), next_hi.min(next_lo));
        if (h, l) == (hi, lo) {
            break;
        }
        hi = h;
        lo = l;
        seq.push((hi, lo));
    }
    Ok(seq)
}

/// `I(a, b) = ∫₀^{π/2} dφ / sqrt(a² cos²φ + b² sin²φ)` by adaptive Simpson quadrature.
pub fn elliptic_integral(a: f64, b: f64) -> Result<f64> {
    check_positive(&[a, b])?;
    let f = |phi: f64| {
        let (s, c) = phi.sin_cos();
        1.0 / (a * a * c * c + b * b * s * s).sqrt()
    };
    Ok(adaptive_simpson(&f, 0.0, FRAC_PI_2, QUADRATURE_TOL))
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Hyperbolic distance `|ln a - ln b|` on the positive reals.
pub fn hyperbolic_distance(a: f64, b: f64) -> Result<f64> {
    check_positive(&[a, b])?;
    Ok((a.ln() - b.ln()).abs())
}

/// Metrics for which the squared-distance mean objective is unimodal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    Hyperbolic,
}

impl Metric {
    pub fn distance(self, a: f64, b: f64) -> f64 {
        match self {
            Metric::Euclidean => (a - b).abs(),
            Metric::Hyperbolic => (a.ln() - b.ln()).abs(),
        }
    }

    // d/dm of d(x, m)²
    fn sq_distance_slope(self, x: f64, m: f64) -> f64 {
        match self {
            Metric::Euclidean => 2.0 * (m - x),
            Metric::Hyperbolic => 2.0 * (m.ln() - x.ln()) / m,
        }
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "hyperbolic" => Ok(Metric::Hyperbolic),
            other => Err(Error::UnsupportedMetric(other.to_string())),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Hyperbolic => "hyperbolic",
        })
    }
}

/// `argmin_m Σ d(x_i, m)²` over `[min x, max x]`.
///
/// Bisects on the sign of the objective's derivative, which is monotone for
/// both supported metrics; stops once the bracket is narrower than `tol`.
pub fn mean_from_metric(x: &[f64], metric: Metric, tol: f64) -> Result<f64> {
    check_positive(x)?;
    let mut lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slope = |m: f64| x.iter().map(|&xi| metric.sq_distance_slope(xi, m)).sum::<f64>();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
