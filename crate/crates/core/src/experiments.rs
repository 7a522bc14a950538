//! Numerical study of the polynomial protocol's consensus value against the
//! arithmetic and arithmetic-geometric means of the initial state.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{integrate, IntegratorConfig, Termination};
use crate::error::{Error, Result};
use crate::graph::WeightedDigraph;
use crate::means::{agm, am, gm, AGM_TOL};
use crate::protocols::ProtocolKind;

pub const MAX_REDRAWS: usize = 1000;
/// Exactness required of the sampler's arithmetic and geometric means.
pub const SAMPLER_TOL: f64 = 1e-10;

const BETA_MAX: f64 = 1e4;
const BISECTION_STEPS: usize = 200;

// ln(am(e^v) / gm(e^v)) for v = β ln z, computed without overflow
fn log_am_gm_ratio(log_z: &[f64], beta: f64) -> f64 {
    let n = log_z.len() as f64;
    let v: Vec<f64> = log_z.iter().map(|l| beta * l).collect();
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = top + v.iter().map(|x| (x - top).exp()).sum::<f64>().ln();
    lse - n.ln() - v.iter().sum::<f64>() / n
}

fn solve_beta(log_z: &[f64], target: f64) -> Result<f64> {
    let mut hi = 1.0;
    while log_am_gm_ratio(log_z, hi) < target {
        hi *= 2.0;
        if hi > BETA_MAX {
            return Err(Error::BadBracket(format!("am/gm ratio not reached for β ≤ {BETA_MAX}")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if log_am_gm_ratio(log_z, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Draws `x` with `am(x) = c1`, `gm(x) = c2` and components in `(lo, hi)`.
///
/// `z` is uniform in `(lo, hi)ⁿ`; the sample is `α z^β` with `β` fixing the
/// am/gm ratio and `α` the scale. Draws leaving the box are repeated.
pub fn sample_constrained_x0(n: usize, c1: f64, c2: f64, lo: f64, hi: f64, seed: u64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("need at least two components, got {n}")));
    }
    if !(c2 > 0.0 && c2 < c1 && c1.is_finite()) {
        return Err(Error::InfeasibleTarget(format!("need 0 < c2 < c1, got c1={c1}, c2={c2}")));
    }
    if !(lo > 0.0 && lo < c2 && hi > c1 && hi.is_finite()) {
        return Err(Error::InfeasibleTarget(format!("need 0 < lo < c2 and hi > c1, got ({lo}, {hi})")));
    }
    let target = (c1 / c2).ln();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bracket_failures = 0;
    for _ in 0..MAX_REDRAWS {
        let log_z: Vec<f64> = (0..n).map(|_| draw_open(&mut rng, lo, hi).ln()).collect();
        if log_z.iter().all(|l| *l == log_z[0]) {
            continue;
        }
        let Ok(beta) = solve_beta(&log_z, target) else {
            bracket_failures += 1;
            continue;
        };
        let z: Vec<f64> = log_z.iter().map(|l| (beta * l).exp()).collect();
        let alpha = c1 / am(&z)?;
        let x: Vec<f64> = z.iter().map(|v| alpha * v).collect();
        if x.iter().any(|v| !(*v > lo && *v < hi)) {
            continue;
        }
        if (am(&x)? - c1).abs() <= SAMPLER_TOL && (gm(&x)? - c2).abs() <= SAMPLER_TOL {
            return Ok(x);
        }
    }
    if bracket_failures == MAX_REDRAWS {
        return Err(Error::BadBracket(format!("am/gm ratio {} not reached on any draw", c1 / c2)));
    }
    Err(Error::InfeasibleTarget(format!(
        "no sample with am={c1}, gm={c2} inside ({lo}, {hi}) after {MAX_REDRAWS} draws"
    )))
}

fn draw_open<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    loop {
        let v = rng.gen_range(lo..hi);
        if v > lo && v > 0.0 {
            return v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraphFamily {
    Complete,
    Regular,
}

impl fmt::Display for GraphFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphFamily::Complete => "complete",
            GraphFamily::Regular => "regular",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSettings {
    pub integrator: IntegratorConfig,
    /// Tolerance on the ratios `am/x̄ ≥ 1` and `agm/x̄ ≤ 1`.
    pub ratio_slack: f64,
    /// Worker threads for independent trials; 1 runs on the calling thread.
    pub workers: usize,
    /// Box for the constrained sampler and for unconstrained regular-graph states.
    pub x0_range: (f64, f64),
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig { consensus_tol: 1e-10, t_end: 200.0, ..IntegratorConfig::default() },
            ratio_slack: 1e-9,
            workers: 1,
            x0_range: (1e-9, 10.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub family: GraphFamily,
    pub n: usize,
    pub d: usize,
    pub normalized: bool,
    pub seed: u64,
    pub trial: usize,
    pub x0: Vec<f64>,
    pub xbar: f64,
    pub terminated_by: Termination,
    pub am0: f64,
    pub gm0: f64,
    pub agm0: f64,
    pub r_am: f64,
    pub r_gm: f64,
    pub r_agm: f64,
    /// `x̄` above the arithmetic mean.
    pub viol_upper: bool,
    /// `x̄` below the arithmetic-geometric mean.
    pub viol_lower: bool,
    /// Recorded maxima never rose and minima never fell.
    pub max_min_monotone: bool,
}

impl TrialRecord {
    /// `min x0 < x̄ < max x0`.
    pub fn bracketed(&self) -> bool {
        let lo = self.x0.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.x0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        lo < self.xbar && self.xbar < hi
    }
}

/// Aggregates over the trials of one graph configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigSummary {
    pub family: GraphFamily,
    pub n: usize,
    pub d: usize,
    pub normalized: bool,
    pub trials: usize,
    pub unconverged: usize,
    pub viol_upper: usize,
    pub viol_lower: usize,
    pub min_r_am: f64,
    pub max_r_agm: f64,
    pub mean_r_agm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub trials: Vec<TrialRecord>,
    pub summaries: Vec<ConfigSummary>,
}

pub const REPORT_HEADER: &str =
    "family,n,d,normalized,seed,trial,xbar,am0,gm0,agm0,r_am,r_gm,r_agm,viol_upper,viol_lower";

impl ExperimentReport {
    fn from_trials(trials: Vec<TrialRecord>) -> Self {
        let mut summaries: Vec<ConfigSummary> = Vec::new();
        for t in &trials {
            let key = (t.family, t.n, t.d, t.normalized);
            let pos = summaries.iter().position(|s| (s.family, s.n, s.d, s.normalized) == key);
            let s = match pos {
                Some(p) => &mut summaries[p],
                None => {
                    summaries.push(ConfigSummary {
                        family: t.family,
                        n: t.n,
                        d: t.d,
                        normalized: t.normalized,
                        trials: 0,
                        unconverged: 0,
                        viol_upper: 0,
                        viol_lower: 0,
                        min_r_am: f64::INFINITY,
                        max_r_agm: f64::NEG_INFINITY,
                        mean_r_agm: 0.0,
                    });
                    summaries.last_mut().unwrap()
                }
            };
            s.trials += 1;
            s.unconverged += usize::from(t.terminated_by != Termination::Consensus);
            s.viol_upper += usize::from(t.viol_upper);
            s.viol_lower += usize::from(t.viol_lower);
            s.min_r_am = s.min_r_am.min(t.r_am);
            s.max_r_agm = s.max_r_agm.max(t.r_agm);
            s.mean_r_agm += t.r_agm;
        }
        for s in &mut summaries {
            s.mean_r_agm /= s.trials as f64;
        }
        Self { trials, summaries }
    }

    pub fn upper_violations(&self) -> usize {
        self.summaries.iter().map(|s| s.viol_upper).sum()
    }

    pub fn lower_violations(&self) -> usize {
        self.summaries.iter().map(|s| s.viol_lower).sum()
    }

    pub fn unconverged(&self) -> usize {
        self.summaries.iter().map(|s| s.unconverged).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for t in &self.trials {
            out.push_str(&format!(
                "{},{},{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}\n",
                t.family,
                t.n,
                t.d,
                t.normalized,
                t.seed,
                t.trial,
                t.xbar,
                t.am0,
                t.gm0,
                t.agm0,
                t.r_am,
                t.r_gm,
                t.r_agm,
                u8::from(t.viol_upper),
                u8::from(t.viol_lower),
            ));
        }
        out
    }

    /// One line per configuration, four decimals.
    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        for s in &self.summaries {
            out.push_str(&format!(
                "{} n={} d={} normalized={} trials={} unconverged={} upper_violations={} lower_violations={} \
                 min_r_am={:.4} max_r_agm={:.4} mean_r_agm={:.4}\n",
                s.family,
                s.n,
                s.d,
                s.normalized,
                s.trials,
                s.unconverged,
                s.viol_upper,
                s.viol_lower,
                s.min_r_am,
                s.max_r_agm,
                s.mean_r_agm
            ));
        }
        out.push_str(&format!(
            "total trials={} upper_violations={} lower_violations={}\n",
            self.trials.len(),
            self.upper_violations(),
            self.lower_violations()
        ));
        out
    }
}

enum X0Source {
    Constrained { c1: f64, c2: f64, lo: f64, hi: f64 },
    Uniform { lo: f64, hi: f64 },
}

struct Job<'a> {
    family: GraphFamily,
    graph: &'a WeightedDigraph,
    d: usize,
    normalized: bool,
    trial: usize,
    seed: u64,
}

fn run_trial(job: &Job<'_>, source: &X0Source, settings: &ExperimentSettings) -> Result<TrialRecord> {
    let n = job.graph.n();
    let x0 = match *source {
        X0Source::Constrained { c1, c2, lo, hi } => sample_constrained_x0(n, c1, c2, lo, hi, job.seed)?,
        X0Source::Uniform { lo, hi } => {
            let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
            (0..n).map(|_| draw_open(&mut rng, lo, hi)).collect()
        }
    };
    let traj = integrate(ProtocolKind::Polynomial, job.graph, &x0, &settings.integrator)?;
    let xbar = traj.consensus_value.unwrap_or_else(|| traj.final_mean());
    let am0 = am(&x0)?;
    let gm0 = gm(&x0)?;
    let agm0 = agm(am0, gm0, AGM_TOL)?;
    let (r_am, r_gm, r_agm) = (am0 / xbar, gm0 / xbar, agm0 / xbar);
    let mut max_min_monotone = true;
    for w in traj.states.windows(2) {
        let hi = |x: &[f64]| x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = |x: &[f64]| x.iter().copied().fold(f64::INFINITY, f64::min);
        let slack = 1e-9;
        max_min_monotone &= hi(&w[1]) <= hi(&w[0]) + slack && lo(&w[1]) >= lo(&w[0]) - slack;
    }
    Ok(TrialRecord {
        family: job.family,
        n,
        d: job.d,
        normalized: job.normalized,
        seed: job.seed,
        trial: job.trial,
        x0,
        xbar,
        terminated_by: traj.terminated_by,
        am0,
        gm0,
        agm0,
        r_am,
        r_gm,
        r_agm,
        viol_upper: r_am < 1.0 - settings.ratio_slack,
        viol_lower: r_agm > 1.0 + settings.ratio_slack,
        max_min_monotone,
    })
}

fn run_jobs(jobs: &[Job<'_>], source: &X0Source, settings: &ExperimentSettings) -> Result<ExperimentReport> {
    settings.integrator.validate()?;
    if settings.workers == 0 {
        return Err(Error::InvalidConfig("workers must be at least 1".into()));
    }
    let trials = if settings.workers == 1 {
        jobs.iter().map(|j| run_trial(j, source, settings)).collect::<Result<Vec<_>>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(settings.workers)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        pool.install(|| jobs.par_iter().map(|j| run_trial(j, source, settings)).collect::<Result<Vec<_>>>())?
    };
    Ok(ExperimentReport::from_trials(trials))
}

// Global trial index `k` is seeded with `master ^ k` so that any split of the
// work samples the same trials.
fn jobs_for<'a>(
    configs: &'a [(GraphFamily, WeightedDigraph, usize, bool)],
    trials: usize,
    seed: u64,
) -> Vec<Job<'a>> {
    configs
        .iter()
        .enumerate()
        .flat_map(|(c, (family, graph, d, normalized))| {
            (0..trials).map(move |t| {
                let trial = c * trials + t;
                Job { family: *family, graph, d: *d, normalized: *normalized, trial, seed: seed ^ trial as u64 }
            })
        })
        .collect()
}

/// Normalized complete graphs for each `n`, initial states with `am = c1`, `gm = c2`.
pub fn run_complete_graph_sweep(
    n_range: impl IntoIterator<Item = usize>,
    trials: usize,
    c1: f64,
    c2: f64,
    seed: u64,
    settings: &ExperimentSettings,
) -> Result<ExperimentReport> {
    let configs = n_range
        .into_iter()
        .map(|n| Ok((GraphFamily::Complete, WeightedDigraph::complete(n, true)?, n - 1, true)))
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = settings.x0_range;
    run_jobs(&jobs_for(&configs, trials, seed), &X0Source::Constrained { c1, c2, lo, hi }, settings)
}

/// Normalized complete graph on `n` nodes with unconstrained states uniform in `(lo, hi)`.
pub fn run_ratio_experiment(
    n: usize,
    trials: usize,
    lo: f64,
    hi: f64,
    seed: u64,
    settings: &ExperimentSettings,
) -> Result<ExperimentReport> {
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidConfig(format!("need 0 ≤ lo < hi, got ({lo}, {hi})")));
    }
    let configs = vec![(GraphFamily::Complete, WeightedDigraph::complete(n, true)?, n - 1, true)];
    run_jobs(&jobs_for(&configs, trials, seed), &X0Source::Uniform { lo, hi }, settings)
}

/// `(n, d)`-regular graphs for each `d`, with unit weights or weights `1/d`.
/// Initial states are uniform in the settings' box.
pub fn run_regular_graph_experiment(
    n: usize,
    d_range: impl IntoIterator<Item = usize>,
    trials: usize,
    normalized: bool,
    seed: u64,
    settings: &ExperimentSettings,
) -> Result<ExperimentReport> {
    let configs = d_range
        .into_iter()
        .map(|d| {
            let graph_seed = seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(d as u64);
            Ok((GraphFamily::Regular, WeightedDigraph::regular(n, d, normalized, graph_seed)?, d, normalized))
        })
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = settings.x0_range;
    run_jobs(&jobs_for(&configs, trials, seed), &X0Source::Uniform { lo, hi }, settings)
}
