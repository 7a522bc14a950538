//! Consensus vector fields and their virtual-Laplacian factorizations.
//!
//! All fields are written per node `i` as sums over the in-neighbours `j`
//! (edges `j -> i` with weight `w_ij`):
//!
//! | protocol           | `ẋ_i`                                              |
//! |--------------------|----------------------------------------------------|
//! | linear             | `Σ w_ij (x_j - x_i)`                                |
//! | polynomial         | `Π_j x_j^{w_ij} - x_i^{out-degree(i)}`              |
//! | entropic           | `x_i Σ w_ij (ln x_j - ln x_i)`                      |
//! | scaling-invariant  | `Σ w_ij (ln x_j - ln x_i)`                          |
//! | metric-driven      | `Σ w_ij sgn(x_j - x_i) d(x_j, x_i)`                 |

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{check_len, check_positive_state, Error, Result};
use crate::graph::{WeightedDigraph, BALANCE_TOL};
use crate::matrix::Matrix;
use crate::means::lgm_unchecked;

/// Pairwise interaction used by the metric-driven protocol family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Interaction {
    Euclidean,
    Hyperbolic,
    /// `sin(x_j - x_i)`, valid while every pairwise difference stays in (-π/2, π/2).
    Sine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolKind {
    Linear,
    Polynomial,
    Entropic,
    ScalingInvariant,
    MetricDriven(Interaction),
}

impl ProtocolKind {
    /// The nonlinear protocols that admit a virtual-Laplacian factorization.
    pub const GEOMETRIC: [ProtocolKind; 3] = [
        ProtocolKind::Polynomial,
        ProtocolKind::Entropic,
        ProtocolKind::ScalingInvariant,
    ];

    pub fn requires_positive_state(self) -> bool {
        !matches!(
            self,
            ProtocolKind::Linear
                | ProtocolKind::MetricDriven(Interaction::Euclidean)
                | ProtocolKind::MetricDriven(Interaction::Sine)
        )
    }

    pub fn requires_balanced_graph(self) -> bool {
        self == ProtocolKind::Polynomial
    }

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Linear => "linear",
            ProtocolKind::Polynomial => "polynomial",
            ProtocolKind::Entropic => "entropic",
            ProtocolKind::ScalingInvariant => "scaling",
            ProtocolKind::MetricDriven(Interaction::Euclidean) => "metric:euclidean",
            ProtocolKind::MetricDriven(Interaction::Hyperbolic) => "metric:hyperbolic",
            ProtocolKind::MetricDriven(Interaction::Sine) => "metric:sine",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "linear" => ProtocolKind::Linear,
            "polynomial" => ProtocolKind::Polynomial,
            "entropic" => ProtocolKind::Entropic,
            "scaling" => ProtocolKind::ScalingInvariant,
            "metric:euclidean" => ProtocolKind::MetricDriven(Interaction::Euclidean),
            "metric:hyperbolic" => ProtocolKind::MetricDriven(Interaction::Hyperbolic),
            "metric:sine" => ProtocolKind::MetricDriven(Interaction::Sine),
            other if other.starts_with("metric:") => {
                return Err(Error::UnsupportedMetric(other["metric:".len()..].to_string()))
            }
            other => return Err(Error::UnknownProtocol(other.to_string())),
        })
    }
}

/// A protocol bound to a graph whose compatibility has been checked once.
#[derive(Debug, Clone)]
pub struct Field<'g> {
    kind: ProtocolKind,
    graph: &'g WeightedDigraph,
    // out-degree per node, the exponent of the polynomial outflow rate
    out_degree: Vec<f64>,
}

impl<'g> Field<'g> {
    pub fn new(kind: ProtocolKind, graph: &'g WeightedDigraph) -> Result<Self> {
        if kind.requires_balanced_graph() && !graph.is_balanced(BALANCE_TOL) {
            return Err(Error::NotBalanced);
        }
        let out_degree = (0..graph.n()).map(|i| graph.out_degree(i)).collect();
        Ok(Self { kind, graph, out_degree })
    }

    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    pub fn graph(&self) -> &'g WeightedDigraph {
        self.graph
    }

    /// Checks the state against the protocol's domain.
    pub fn check_state(&self, x: &[f64]) -> Result<()> {
        check_len(self.graph.n(), x.len())?;
        if self.kind.requires_positive_state() {
            check_positive_state(x)?;
        }
        if self.kind == ProtocolKind::MetricDriven(Interaction::Sine) {
            let spread = spread_of(x);
            if !(spread < FRAC_PI_2) {
                return Err(Error::SineDomainViolation { spread });
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.eval_into(x, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_state(x)?;
        let g = self.graph;
        match self.kind {
            ProtocolKind::Linear => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = g.in_neighbors(i).iter().map(|&(j, w)| w * (x[j] - x[i])).sum();
                }
            }
            ProtocolKind::Polynomial => {
                let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
                for (i, o) in out.iter_mut().enumerate() {
                    let log_in: f64 = g.in_neighbors(i).iter().map(|&(j, w)| w * lx[j]).sum();
                    *o = log_in.exp() - (self.out_degree[i] * lx[i]).exp();
                }
            }
            ProtocolKind::Entropic => {
                let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
                for (i, o) in out.iter_mut().enumerate() {
                    let s: f64 = g.in_neighbors(i).iter().map(|&(j, w)| w * (lx[j] - lx[i])).sum();
                    *o = x[i] * s;
                }
            }
            ProtocolKind::ScalingInvariant => {
                let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = g.in_neighbors(i).iter().map(|&(j, w)| w * (lx[j] - lx[i])).sum();
                }
            }
            ProtocolKind::MetricDriven(Interaction::Sine) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = g.in_neighbors(i).iter().map(|&(j, w)| w * (x[j] - x[i]).sin()).sum();
                }
            }
            ProtocolKind::MetricDriven(metric) => {
                let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = g
                        .in_neighbors(i)
                        .iter()
                        .map(|&(j, w)| {
                            let d = match metric {
                                Interaction::Euclidean => (x[j] - x[i]).abs(),
                                _ => (lx[j] - lx[i]).abs(),
                            };
                            w * (sgn(x[j] - x[i]) * d)
                        })
                        .sum();
                }
            }
        }
        Ok(())
    }
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn spread_of(x: &[f64]) -> f64 {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// `ẋ` for the given protocol on `g` at state `x`.
pub fn vector_field(kind: ProtocolKind, g: &WeightedDigraph, x: &[f64]) -> Result<Vec<f64>> {
    Field::new(kind, g)?.eval(x)
}

/// Single edge term `f(x_i, x_j)` of a metric-driven field with unit weight.
pub fn interaction_term(interaction: Interaction, xi: f64, xj: f64) -> f64 {
    match interaction {
        Interaction::Euclidean => sgn(xj - xi) * (xj - xi).abs(),
        Interaction::Hyperbolic => sgn(xj - xi) * (xj.ln() - xi.ln()).abs(),
        Interaction::Sine => (xj - xi).sin(),
    }
}

/// Inflow and outflow rates `(r⁺_i, r⁻_i)` of node `i` in the polynomial protocol.
pub fn rates(g: &WeightedDigraph, x: &[f64], i: usize) -> Result<(f64, f64)> {
    check_len(g.n(), x.len())?;
    check_positive_state(x)?;
    let r_plus = g
        .in_neighbors(i)
        .iter()
        .map(|&(j, w)| w * x[j].ln())
        .sum::<f64>()
        .exp();
    let r_minus = (g.out_degree(i) * x[i].ln()).exp();
    Ok((r_plus, r_minus))
}

/// State-dependent factors of the nonlinear protocols.
#[derive(Debug, Clone)]
pub struct VirtualFactors {
    /// Laplacian with edge weights `w_ij / lgm(x_j, x_i)`.
    pub lx: Matrix,
    /// Diagonal of `R`: `lgm(r⁺_i, r⁻_i)`.
    pub r: Vec<f64>,
    /// Diagonal of `X`: the state itself.
    pub x: Vec<f64>,
}

impl VirtualFactors {
    pub fn r_matrix(&self) -> Matrix {
        Matrix::diagonal(&self.r)
    }

    pub fn x_matrix(&self) -> Matrix {
        Matrix::diagonal(&self.x)
    }
}

pub fn virtual_factors(g: &WeightedDigraph, x: &[f64]) -> Result<VirtualFactors> {
    check_len(g.n(), x.len())?;
    check_positive_state(x)?;
    let n = g.n();
    let mut lx = Matrix::zeros(n);
    for i in 0..n {
        let mut diag = 0.0;
        for &(j, w) in g.in_neighbors(i) {
            let v = w / lgm_unchecked(x[j], x[i]);
            lx[(i, j)] = -v;
            diag += v;
        }
        lx[(i, i)] = diag;
    }
    let r = (0..n)
        .map(|i| rates(g, x, i).map(|(p, m)| lgm_unchecked(p, m)))
        .collect::<Result<_>>()?;
    Ok(VirtualFactors { lx, r, x: x.to_vec() })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (p, q)| m.max((p - q).abs()))
}

/// Largest ∞-norm gap between the direct field and its factorized forms.
///
/// For the three nonlinear protocols (`M = R`, `X`, or `I`):
/// `ẋ = -M L_X x = -M L ln x`. Other kinds return `0` against themselves
/// except for the identity `L_X x = L ln x`, which is always included.
pub fn field_equivalence_residual(kind: ProtocolKind, g: &WeightedDigraph, x: &[f64]) -> Result<f64> {
    let direct = vector_field(kind, g, x)?;
    let factors = virtual_factors(g, x)?;
    let lx_x = factors.lx.mul_vec(x);
    let ln_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let l_ln_x = g.laplacian().mul_vec(&ln_x);
    let shift = max_abs_diff(&lx_x, &l_ln_x);

    let scale: Vec<f64> = match kind {
        ProtocolKind::Polynomial => factors.r.clone(),
        ProtocolKind::Entropic => factors.x.clone(),
        ProtocolKind::ScalingInvariant | ProtocolKind::MetricDriven(Interaction::Hyperbolic) => {
            vec![1.0; x.len()]
        }
        _ => return Ok(shift),
    };
    let via_lx: Vec<f64> = scale.iter().zip(&lx_x).map(|(s, v)| -s * v).collect();
    let via_log: Vec<f64> = scale.iter().zip(&l_ln_x).map(|(s, v)| -s * v).collect();
    Ok(max_abs_diff(&direct, &via_lx)
        .max(max_abs_diff(&direct, &via_log))
        .max(shift))
}
