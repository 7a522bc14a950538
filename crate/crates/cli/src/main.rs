use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;

use config::{RunConfig, Span};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "geocons", version, about = "Simulate and analyse geometric-mean consensus protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a protocol and write the trajectory as CSV.
    Simulate(SimulateArgs),
    /// Print graph properties and the Perron vector as JSON.
    GraphInfo(GraphArgs),
    /// Minimize free energy subject to a fixed product.
    SolveGm(SolveArgs),
    /// Arithmetic, geometric, logarithmic and arithmetic-geometric means.
    Means(MeansArgs),
    /// Polynomial-protocol consensus studies.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Debug, Args)]
struct GraphArgs {
    /// Edge-list file, `complete:n` or `regular:n,d`.
    #[arg(long)]
    graph: Option<String>,
    /// Use weights 1/in-degree for generated graphs.
    #[arg(long)]
    normalized: bool,
    /// Seed for the node labelling of generated regular graphs.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    protocol: Option<String>,
    /// `a,b,c,...` or `sample:c1,c2`.
    #[arg(long)]
    x0: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Consensus threshold on max - min.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    min_dt: Option<f64>,
    #[arg(long)]
    record_stride: Option<usize>,
    /// `rk4_adaptive_positivity` or `rk4_fixed`.
    #[arg(long)]
    method: Option<String>,
    /// Trajectory CSV destination.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Free-energy CSV destination.
    #[arg(long)]
    energy_out: Option<PathBuf>,
    /// Flat JSON file with any of the above keys.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Positive values `a,b,c,...`.
    #[arg(long)]
    x: String,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
}

#[derive(Debug, Args)]
struct MeansArgs {
    /// Positive values `a,b,c,...`.
    #[arg(long)]
    x: String,
    /// Optional weights summing to one.
    #[arg(long)]
    weights: Option<String>,
}

#[derive(Debug, Args)]
struct ExperimentShared {
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Report CSV destination.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum ExperimentCommand {
    /// Normalized complete graphs with initial states of prescribed am and gm.
    Sweep {
        /// Node counts, e.g. `2..10`.
        #[arg(long)]
        n: Option<Span>,
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long)]
        c2: Option<f64>,
        #[command(flatten)]
        shared: ExperimentShared,
    },
    /// One normalized complete graph with uniform random initial states.
    Ratio {
        #[arg(long)]
        n: Option<Span>,
        #[arg(long)]
        lo: Option<f64>,
        #[arg(long)]
        hi: Option<f64>,
        #[command(flatten)]
        shared: ExperimentShared,
    },
    /// Regular graphs over a range of degrees.
    Regular {
        #[arg(long)]
        n: Option<Span>,
        /// Degrees, e.g. `2..8`.
        #[arg(long)]
        d: Option<Span>,
        #[arg(long)]
        normalized: bool,
        #[command(flatten)]
        shared: ExperimentShared,
    },
}

impl ExperimentShared {
    fn into_config(self, base: RunConfig) -> Result<RunConfig, CliError> {
        RunConfig {
            trials: self.trials,
            seed: self.seed,
            workers: self.workers,
            dt: self.dt,
            t_end: self.t_end,
            tol: self.tol,
            out: self.out,
            ..base
        }
        .with_file(self.config.as_deref())
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Simulate(a) => {
            let flags = RunConfig {
                graph: a.graph.graph,
                normalized: a.graph.normalized.then_some(true),
                seed: a.graph.seed,
                protocol: a.protocol,
                x0: a.x0,
                dt: a.dt,
                t_end: a.t_end,
                tol: a.tol,
                min_dt: a.min_dt,
                record_stride: a.record_stride,
                method: a.method,
                out: a.out,
                energy_out: a.energy_out,
                ..RunConfig::default()
            };
            commands::simulate(flags.with_file(a.config.as_deref())?)
        }
        Command::GraphInfo(a) => commands::graph_info(a.graph, a.normalized, a.seed),
        Command::SolveGm(a) => commands::solve_gm(&a.x, a.tol, a.max_iter),
        Command::Means(a) => commands::means(&a.x, a.weights.as_deref()),
        Command::Experiment(e) => match e {
            ExperimentCommand::Sweep { n, c1, c2, shared } => {
                let base = RunConfig { n, c1, c2, ..RunConfig::default() };
                commands::sweep(shared.into_config(base)?)
            }
            ExperimentCommand::Ratio { n, lo, hi, shared } => {
                let base = RunConfig { n, lo, hi, ..RunConfig::default() };
                commands::ratio(shared.into_config(base)?)
            }
            ExperimentCommand::Regular { n, d, normalized, shared } => {
                let base = RunConfig { n, d, normalized: normalized.then_some(true), ..RunConfig::default() };
                commands::regular(shared.into_config(base)?)
            }
        },
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("geocons: {e}");
            ExitCode::from(e.code())
        }
    }
}
