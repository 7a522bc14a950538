//! Integration of consensus fields with a positivity-preserving RK4 scheme.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_positive_state, Error, Result};
use crate::graph::{PerronVector, WeightedDigraph, PERRON_TOL};
use crate::protocols::{Field, Interaction, ProtocolKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Plain classical RK4 with constant step; leaving the domain ends the run.
    Rk4Fixed,
    /// RK4 that rejects steps leaving the positive orthant (or breaking the
    /// max/min principle) and halves the step.
    Rk4AdaptivePositivity,
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4_fixed" => Ok(Method::Rk4Fixed),
            "rk4_adaptive_positivity" => Ok(Method::Rk4AdaptivePositivity),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rk4Fixed => "rk4_fixed",
            Method::Rk4AdaptivePositivity => "rk4_adaptive_positivity",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub consensus_tol: f64,
    pub min_dt: f64,
    pub record_stride: usize,
    pub method: Method,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 50.0,
            consensus_tol: 1e-8,
            min_dt: 1e-12,
            record_stride: 10,
            method: Method::Rk4AdaptivePositivity,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.min_dt > 0.0) {
            return bad("min_dt must be positive");
        }
        if !(self.dt >= self.min_dt) || !self.dt.is_finite() {
            return bad("dt must be finite and at least min_dt");
        }
        if !(self.t_end > 0.0) {
            return bad("t_end must be positive");
        }
        if !(self.consensus_tol > 0.0) {
            return bad("consensus_tol must be positive");
        }
        if self.record_stride == 0 {
            return bad("record_stride must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Consensus,
    Horizon,
    Failure,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Consensus => "consensus",
            Termination::Horizon => "horizon",
            Termination::Failure => "failure",
        })
    }
}

/// Sampled solution of one integration run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub terminated_by: Termination,
    /// Arithmetic mean of the final state; present iff the run reached consensus.
    pub consensus_value: Option<f64>,
    pub consensus_tol: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial_state(&self) -> &[f64] {
        &self.states[0]
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial time")
    }

    pub fn spreads(&self) -> Vec<f64> {
        self.states.iter().map(|x| spread_unchecked(x)).collect()
    }

    /// Arithmetic mean of the final state, whether or not consensus was reached.
    pub fn final_mean(&self) -> f64 {
        let x = self.final_state();
        x.iter().sum::<f64>() / x.len() as f64
    }
}

/// `max_i x_i - min_i x_i`
pub fn spread(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(spread_unchecked(x))
}

fn spread_unchecked(x: &[f64]) -> f64 {
    let (lo, hi) = min_max(x);
    hi - lo
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

struct Rk4<'f, 'g> {
    field: &'f Field<'g>,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl<'f, 'g> Rk4<'f, 'g> {
    fn new(field: &'f Field<'g>, n: usize) -> Self {
        Self {
            field,
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            tmp: vec![0.0; n],
        }
    }

    // Fails if any stage state falls outside the field's domain.
    fn step(&mut self, x: &[f64], h: f64, out: &mut [f64]) -> Result<()> {
        let [k1, k2, k3, k4] = &mut self.k;
        self.field.eval_into(x, k1)?;
        for ((t, xi), k) in self.tmp.iter_mut().zip(x).zip(k1.iter()) {
            *t = xi + 0.5 * h * k;
        }
        self.field.eval_into(&self.tmp, k2)?;
        for ((t, xi), k) in self.tmp.iter_mut().zip(x).zip(k2.iter()) {
            *t = xi + 0.5 * h * k;
        }
        self.field.eval_into(&self.tmp, k3)?;
        for ((t, xi), k) in self.tmp.iter_mut().zip(x).zip(k3.iter()) {
            *t = xi + h * k;
        }
        self.field.eval_into(&self.tmp, k4)?;
        for (i, o) in out.iter_mut().enumerate() {
            *o = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        Ok(())
    }
}

/// Accepted steps at the current size before the step is doubled again.
const RESTORE_AFTER: usize = 10;

// Exact flows never raise the maximum or lower the minimum; the slack only
// absorbs round-off in the final RK4 combination.
fn admissible(kind: ProtocolKind, prev: &[f64], next: &[f64], max_principle: bool) -> bool {
    if next.iter().any(|v| !v.is_finite() || !(*v > 0.0)) {
        return false;
    }
    if !max_principle {
        return true;
    }
    let (lo0, hi0) = min_max(prev);
    let (lo1, hi1) = min_max(next);
    let slack = 8.0 * f64::EPSILON * hi0.abs().max(lo0.abs());
    if kind == ProtocolKind::MetricDriven(Interaction::Sine) && !(hi1 - lo1 < std::f64::consts::FRAC_PI_2) {
        return false;
    }
    hi1 <= hi0 + slack && lo1 >= lo0 - slack
}

/// Integrates `kind` on `g` from `x0` until consensus or the horizon.
pub fn integrate(
    kind: ProtocolKind,
    g: &WeightedDigraph,
    x0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let field = Field::new(kind, g)?;
    field.check_state(x0)?;
    check_positive_state(x0)?;
    if !g.is_strongly_connected() {
        log::warn!("graph is not strongly connected; consensus is not guaranteed");
    }

    let n = x0.len();
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![x0.to_vec()],
        terminated_by: Termination::Horizon,
        consensus_value: None,
        consensus_tol: cfg.consensus_tol,
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let mut rk = Rk4::new(&field, n);
    let mut x = x0.to_vec();
    let mut next = vec![0.0; n];
    let mut t = 0.0;
    let mut h = cfg.dt;
    let mut streak = 0;
    let mut since_record = 0;

    let termination = loop {
        if spread_unchecked(&x) <= cfg.consensus_tol {
            break Termination::Consensus;
        }
        if t >= cfg.t_end {
            break Termination::Horizon;
        }
        let step = h.min(cfg.t_end - t);
        let guarded = cfg.method == Method::Rk4AdaptivePositivity;
        let ok = rk.step(&x, step, &mut next).is_ok() && admissible(kind, &x, &next, guarded);
        match cfg.method {
            Method::Rk4Fixed if !ok => break Termination::Failure,
            Method::Rk4Fixed => {}
            Method::Rk4AdaptivePositivity if !ok => {
                traj.rejected_steps += 1;
                streak = 0;
                h *= 0.5;
                if h < cfg.min_dt {
                    return Err(Error::StepUnderflow { t, dt: h, min_dt: cfg.min_dt });
                }
                continue;
            }
            Method::Rk4AdaptivePositivity => {
                streak += 1;
                if streak >= RESTORE_AFTER && h < cfg.dt {
                    h = (2.0 * h).min(cfg.dt);
                    streak = 0;
                }
            }
        }
        std::mem::swap(&mut x, &mut next);
        t += step;
        traj.accepted_steps += 1;
        since_record += 1;
        if since_record >= cfg.record_stride {
            since_record = 0;
            traj.times.push(t);
            traj.states.push(x.clone());
        }
    };

    if *traj.times.last().unwrap() < t {
        traj.times.push(t);
        traj.states.push(x.clone());
    }
    traj.terminated_by = termination;
    if termination == Termination::Consensus {
        traj.consensus_value = Some(traj.final_mean());
    }
    Ok(traj)
}

/// Scalar invariant of a protocol's flow, evaluated with a precomputed Perron vector.
#[derive(Debug, Clone)]
pub struct Invariant {
    kind: InvariantKind,
    q: PerronVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InvariantKind {
    /// `q̂ · ln x`
    LogWeighted,
    /// `q̂ · x`
    Weighted,
}

impl Invariant {
    /// `None` when the protocol has no known invariant (polynomial, sine).
    pub fn for_protocol(kind: ProtocolKind, g: &WeightedDigraph) -> Result<Option<Self>> {
        let inv = match kind {
            ProtocolKind::Entropic => InvariantKind::LogWeighted,
            ProtocolKind::Linear
            | ProtocolKind::ScalingInvariant
            | ProtocolKind::MetricDriven(Interaction::Euclidean)
            | ProtocolKind::MetricDriven(Interaction::Hyperbolic) => InvariantKind::Weighted,
            ProtocolKind::Polynomial | ProtocolKind::MetricDriven(Interaction::Sine) => {
                return Ok(None)
            }
        };
        let q = g.perron_left_vector(PERRON_TOL)?;
        Ok(Some(Self { kind: inv, q }))
    }

    pub fn perron(&self) -> &PerronVector {
        &self.q
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        crate::error::check_len(self.q.len(), x.len())?;
        match self.kind {
            InvariantKind::Weighted => Ok(self.q.dot(x)),
            InvariantKind::LogWeighted => {
                check_positive_state(x)?;
                Ok(self.q.iter().zip(x).map(|(q, v)| q * v.ln()).sum())
            }
        }
    }
}

/// The conserved quantity of `kind` at state `x`, if the protocol has one.
pub fn conserved_quantity(kind: ProtocolKind, g: &WeightedDigraph, x: &[f64]) -> Result<Option<f64>> {
    match Invariant::for_protocol(kind, g)? {
        Some(inv) => inv.eval(x).map(Some),
        None => Ok(None),
    }
}

pub const MIN_RATE_SAMPLES: usize = 10;

/// Least-squares slope of `ln spread(t)` over samples with spread above the
/// consensus tolerance. Negative values indicate exponential contraction.
pub fn convergence_rate(traj: &Trajectory) -> Result<f64> {
    let pts: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, x)| (t, spread_unchecked(x)))
        .filter(|&(_, s)| s > traj.consensus_tol && s > 0.0)
        .map(|(t, s)| (t, s.ln()))
        .collect();
    if pts.len() < MIN_RATE_SAMPLES {
        return Err(Error::InsufficientSamples { have: pts.len(), need: MIN_RATE_SAMPLES });
    }
    let m = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &(t, y)| (a + t, b + y));
    let (mt, my) = (st / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(num, den), &(t, y)| {
        (num + (t - mt) * (y - my), den + (t - mt) * (t - mt))
    });
    Ok(num / den)
}

/// Writes `t,x0,…,x{n-1},spread,conserved` with 17 significant digits.
pub fn trajectory_csv(traj: &Trajectory, kind: ProtocolKind, g: &WeightedDigraph) -> Result<String> {
    let n = traj.initial_state().len();
    let invariant = if g.is_strongly_connected() {
        Invariant::for_protocol(kind, g)?
    } else {
        None
    };
    let mut out = String::from("t");
    for i in 0..n {
        out.push_str(&format!(",x{i}"));
    }
    out.push_str(",spread,conserved\n");
    for (t, x) in traj.times.iter().zip(&traj.states) {
        out.push_str(&format!("{t:.16e}"));
        for v in x {
            out.push_str(&format!(",{v:.16e}"));
        }
        out.push_str(&format!(",{:.16e},", spread_unchecked(x)));
        if let Some(inv) = &invariant {
            out.push_str(&format!("{:.16e}", inv.eval(x)?));
        }
        out.push('\n');
    }
    Ok(out)
}
