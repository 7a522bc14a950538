//! Flat JSON run configuration. Flags given on the command line win over
//! values read from the file.

use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use geocons::experiments::sample_constrained_x0;
use geocons::WeightedDigraph;

use crate::error::{CliError, CliResult};

/// A count or an inclusive range, written `5`, `"5"`, `"2..10"` or `"2..=10"`.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum Span {
    One(usize),
    Text(String),
}

impl Span {
    pub fn range(&self) -> CliResult<RangeInclusive<usize>> {
        match self {
            Span::One(v) => Ok(*v..=*v),
            Span::Text(s) => parse_range(s),
        }
    }

    pub fn single(&self) -> CliResult<usize> {
        let r = self.range()?;
        if r.start() != r.end() {
            return Err(CliError::Usage(format!("expected a single value, got a range {r:?}")));
        }
        Ok(*r.start())
    }
}

pub fn parse_range(s: &str) -> CliResult<RangeInclusive<usize>> {
    let num = |t: &str| {
        t.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("invalid count or range `{s}`")))
    };
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let v = num(s)?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(CliError::Usage(format!("empty range `{s}`")));
    }
    Ok(lo..=hi)
}

impl std::str::FromStr for Span {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_range(s).map_err(|e| e.to_string())?;
        Ok(Span::Text(s.to_string()))
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub graph: Option<String>,
    pub normalized: Option<bool>,
    pub protocol: Option<String>,
    pub x0: Option<String>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub tol: Option<f64>,
    pub min_dt: Option<f64>,
    pub record_stride: Option<usize>,
    pub method: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub energy_out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub n: Option<Span>,
    pub d: Option<Span>,
    pub trials: Option<usize>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl RunConfig {
    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.out.iter_mut().chain(cfg.energy_out.iter_mut()).for_each(rebase);
        if let Some(g) = cfg.graph.as_mut() {
            if !is_generator(g) && Path::new(g.as_str()).is_relative() {
                *g = base.join(g.as_str()).to_string_lossy().into_owned();
            }
        }
        Ok(cfg)
    }

    /// Field-wise `self` over `fallback`.
    pub fn or(self, fallback: RunConfig) -> RunConfig {
        RunConfig {
            graph: self.graph.or(fallback.graph),
            normalized: self.normalized.or(fallback.normalized),
            protocol: self.protocol.or(fallback.protocol),
            x0: self.x0.or(fallback.x0),
            dt: self.dt.or(fallback.dt),
            t_end: self.t_end.or(fallback.t_end),
            tol: self.tol.or(fallback.tol),
            min_dt: self.min_dt.or(fallback.min_dt),
            record_stride: self.record_stride.or(fallback.record_stride),
            method: self.method.or(fallback.method),
            seed: self.seed.or(fallback.seed),
            out: self.out.or(fallback.out),
            energy_out: self.energy_out.or(fallback.energy_out),
            workers: self.workers.or(fallback.workers),
            n: self.n.or(fallback.n),
            d: self.d.or(fallback.d),
            trials: self.trials.or(fallback.trials),
            c1: self.c1.or(fallback.c1),
            c2: self.c2.or(fallback.c2),
            lo: self.lo.or(fallback.lo),
            hi: self.hi.or(fallback.hi),
        }
    }

    pub fn with_file(self, path: Option<&Path>) -> CliResult<RunConfig> {
        match path {
            Some(p) => Ok(self.or(RunConfig::load(p)?)),
            None => Ok(self),
        }
    }
}

fn is_generator(spec: &str) -> bool {
    spec.starts_with("complete:") || spec.starts_with("regular:")
}

/// `path`, `complete:n` or `regular:n,d`.
pub fn load_graph(spec: &str, normalized: bool, seed: u64) -> CliResult<WeightedDigraph> {
    let usage = || CliError::Usage(format!("invalid graph spec `{spec}`"));
    if let Some(n) = spec.strip_prefix("complete:") {
        let n = n.trim().parse().map_err(|_| usage())?;
        return Ok(WeightedDigraph::complete(n, normalized)?);
    }
    if let Some(rest) = spec.strip_prefix("regular:") {
        let (n, d) = rest.split_once(',').ok_or_else(usage)?;
        let n = n.trim().parse().map_err(|_| usage())?;
        let d = d.trim().parse().map_err(|_| usage())?;
        return Ok(WeightedDigraph::regular(n, d, normalized, seed)?);
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    text.parse::<WeightedDigraph>()
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

pub fn parse_csv(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("invalid number `{}` in `{s}`", t.trim())))
        })
        .collect()
}

/// A literal `a,b,c` or `sample:c1,c2` drawn with the constrained sampler.
pub fn initial_state(spec: &str, n: usize, seed: u64) -> CliResult<Vec<f64>> {
    if let Some(rest) = spec.strip_prefix("sample:") {
        let v = parse_csv(rest)?;
        let [c1, c2] = v[..] else {
            return Err(CliError::Usage(format!("`sample:` takes two means, got `{rest}`")));
        };
        return Ok(sample_constrained_x0(n, c1, c2, 1e-9, 10.0, seed)?);
    }
    let x = parse_csv(spec)?;
    if x.len() != n {
        return Err(CliError::Usage(format!("initial state has {} entries, graph has {n} nodes", x.len())));
    }
    Ok(x)
}
