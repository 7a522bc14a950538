use std::path::Path;

use serde::Serialize;

use geocons::energy::audit_energy_descent;
use geocons::means::AGM_TOL;
use geocons::{
    agm, am, am_w, gm, gm_w, integrate, lgm, solve_gm_variational, trajectory_csv, ExperimentReport,
    ExperimentSettings, IntegratorConfig, ProtocolKind, Termination, WeightVector,
};

use crate::config::{initial_state, load_graph, parse_csv, RunConfig};
use crate::error::{CliError, CliResult};

const DEFAULT_SEED: u64 = 1;

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::write(path, e))
}

fn integrator(cfg: &RunConfig, base: IntegratorConfig) -> CliResult<IntegratorConfig> {
    let method = match &cfg.method {
        Some(m) => m.parse()?,
        None => base.method,
    };
    let out = IntegratorConfig {
        dt: cfg.dt.unwrap_or(base.dt),
        t_end: cfg.t_end.unwrap_or(base.t_end),
        consensus_tol: cfg.tol.unwrap_or(base.consensus_tol),
        min_dt: cfg.min_dt.unwrap_or(base.min_dt),
        record_stride: cfg.record_stride.unwrap_or(base.record_stride),
        method,
    };
    out.validate()?;
    Ok(out)
}

/// Exit status 0 on consensus, 2 when the horizon is reached first.
pub fn simulate(cfg: RunConfig) -> CliResult<u8> {
    let spec = cfg.graph.as_deref().ok_or_else(|| CliError::Usage("--graph is required".into()))?;
    let protocol: ProtocolKind = cfg
        .protocol
        .as_deref()
        .ok_or_else(|| CliError::Usage("--protocol is required".into()))?
        .parse()?;
    let x0_spec = cfg.x0.as_deref().ok_or_else(|| CliError::Usage("--x0 is required".into()))?;
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let integ = integrator(&cfg, IntegratorConfig::default())?;
    let g = load_graph(spec, cfg.normalized.unwrap_or(false), seed)?;
    let x0 = initial_state(x0_spec, g.n(), seed)?;

    let traj = integrate(protocol, &g, &x0, &integ)?;
    if let Some(path) = &cfg.out {
        write_file(path, &trajectory_csv(&traj, protocol, &g)?)?;
    }
    if let Some(path) = &cfg.energy_out {
        let report = audit_energy_descent(&traj, &g)?;
        write_file(path, &report.to_csv())?;
    }

    println!("protocol {protocol}");
    println!("termination {}", traj.terminated_by);
    println!("time {:.4}", traj.final_time());
    match traj.consensus_value {
        Some(v) => println!("consensus {v:.4}"),
        None => println!("final_mean {:.4}", traj.final_mean()),
    }
    println!("am {:.4}", am(&x0)?);
    if x0.iter().all(|v| *v > 0.0) {
        println!("gm {:.4}", gm(&x0)?);
    }
    if let Ok(q) = g.perron_left_vector(geocons::graph::PERRON_TOL) {
        let w = WeightVector::from(q);
        println!("am_w {:.4}", am_w(&x0, &w)?);
        if x0.iter().all(|v| *v > 0.0) {
            println!("gm_w {:.4}", gm_w(&x0, &w)?);
        }
    }
    Ok(match traj.terminated_by {
        Termination::Consensus => 0,
        Termination::Horizon => 2,
        Termination::Failure => {
            eprintln!("geocons: integration stopped on a non-positive state");
            1
        }
    })
}

#[derive(Serialize)]
struct GraphInfo {
    n: usize,
    edges: usize,
    balanced: bool,
    symmetric: bool,
    strongly_connected: bool,
    perron: Option<Vec<f64>>,
}

pub fn graph_info(spec: Option<String>, normalized: bool, seed: Option<u64>) -> CliResult<u8> {
    let spec = spec.ok_or_else(|| CliError::Usage("--graph is required".into()))?;
    let g = load_graph(&spec, normalized, seed.unwrap_or(DEFAULT_SEED))?;
    let info = GraphInfo {
        n: g.n(),
        edges: g.edge_count(),
        balanced: g.is_balanced(geocons::graph::BALANCE_TOL),
        symmetric: g.is_symmetric(),
        strongly_connected: g.is_strongly_connected(),
        perron: g.perron_left_vector(geocons::graph::PERRON_TOL).ok().map(|q| q.into_inner()),
    };
    let json = serde_json::to_string_pretty(&info).map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("{json}");
    Ok(0)
}

pub fn solve_gm(x: &str, tol: f64, max_iter: usize) -> CliResult<u8> {
    let x = parse_csv(x)?;
    let s = solve_gm_variational(&x, tol, max_iter)?;
    println!("y* = {:.4}·1", am(&s.y_star)?);
    println!("am(y*) = {:.4}", am(&s.y_star)?);
    println!("gm(x) = {:.4}", gm(&x)?);
    println!("lambda = {:.4}", s.lagrange_multiplier);
    println!("kkt_residual = {:.3e}", s.kkt_residual);
    println!("iterations = {}", s.iterations);
    Ok(0)
}

pub fn means(x: &str, weights: Option<&str>) -> CliResult<u8> {
    let x = parse_csv(x)?;
    println!("am {:.4}", am(&x)?);
    println!("gm {:.4}", gm(&x)?);
    if let [a, b] = x[..] {
        println!("lgm {:.4}", lgm(a, b)?);
        println!("agm {:.4}", agm(a, b, AGM_TOL)?);
    }
    if let Some(w) = weights {
        let w = WeightVector::new(parse_csv(w)?)?;
        println!("am_w {:.4}", am_w(&x, &w)?);
        println!("gm_w {:.4}", gm_w(&x, &w)?);
    }
    Ok(0)
}

fn settings(cfg: &RunConfig) -> CliResult<ExperimentSettings> {
    let base = ExperimentSettings::default();
    let integ = integrator(cfg, base.integrator.clone())?;
    Ok(ExperimentSettings { integrator: integ, workers: cfg.workers.unwrap_or(1), ..base })
}

fn finish(report: &ExperimentReport, cfg: &RunConfig) -> CliResult<u8> {
    if let Some(path) = &cfg.out {
        write_file(path, &report.to_csv())?;
    }
    print!("{}", report.summary_text());
    Ok(0)
}

pub fn sweep(cfg: RunConfig) -> CliResult<u8> {
    let ns = match &cfg.n {
        Some(s) => s.range()?,
        None => 2..=10,
    };
    let report = geocons::run_complete_graph_sweep(
        ns,
        cfg.trials.unwrap_or(12),
        cfg.c1.unwrap_or(4.0),
        cfg.c2.unwrap_or(3.0),
        cfg.seed.unwrap_or(DEFAULT_SEED),
        &settings(&cfg)?,
    )?;
    finish(&report, &cfg)
}

pub fn ratio(cfg: RunConfig) -> CliResult<u8> {
    let n = match &cfg.n {
        Some(s) => s.single()?,
        None => 5,
    };
    let report = geocons::run_ratio_experiment(
        n,
        cfg.trials.unwrap_or(100),
        cfg.lo.unwrap_or(0.0),
        cfg.hi.unwrap_or(10.0),
        cfg.seed.unwrap_or(DEFAULT_SEED),
        &settings(&cfg)?,
    )?;
    finish(&report, &cfg)
}

pub fn regular(cfg: RunConfig) -> CliResult<u8> {
    let n = match &cfg.n {
        Some(s) => s.single()?,
        None => 12,
    };
    let ds = match &cfg.d {
        Some(s) => s.range()?,
        None => 2..=8,
    };
    if *ds.end() >= n || *ds.start() < 2 {
        return Err(CliError::Usage(format!("degrees must satisfy 2 ≤ d < n = {n}, got {ds:?}")));
    }
    let report = geocons::run_regular_graph_experiment(
        n,
        ds,
        cfg.trials.unwrap_or(10),
        cfg.normalized.unwrap_or(false),
        cfg.seed.unwrap_or(DEFAULT_SEED),
        &settings(&cfg)?,
    )?;
    finish(&report, &cfg)
}
