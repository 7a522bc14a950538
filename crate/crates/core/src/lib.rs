#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Consensus protocols driven by geometric means on weighted digraphs.
//!
//! The crate covers the graph substrate (Laplacians, Perron vectors), the
//! family of means the protocols converge to, the protocol vector fields and
//! their virtual-Laplacian factorizations, a positivity-preserving integrator,
//! free-energy diagnostics, the variational characterization of the geometric
//! mean, and the numerical experiments on the polynomial protocol.

pub mod dynamics;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod matrix;
pub mod means;
pub mod optimize;
pub mod protocols;

pub use dynamics::{
    conserved_quantity, convergence_rate, integrate, spread, trajectory_csv, IntegratorConfig, Invariant, Method,
    Termination, Trajectory,
};
pub use energy::{
    audit_energy_descent, eigendecomposition_projection_residual, free_energy, free_energy_unit, projected_gradient,
    relative_entropy, EnergyReport,
};
pub use error::{Error, Result};
pub use experiments::{
    run_complete_graph_sweep, run_ratio_experiment, run_regular_graph_experiment, sample_constrained_x0,
    ConfigSummary, ExperimentReport, ExperimentSettings, GraphFamily, TrialRecord,
};
pub use graph::{Edge, PerronVector, WeightedDigraph};
pub use matrix::Matrix;
pub use means::{agm, am, am_w, elliptic_integral, gm, gm_w, lgm, Metric, WeightVector};
pub use optimize::{kkt_residual, solve_gm_variational, solution_characteristic_residual, GmVariationalSolution};
pub use protocols::{field_equivalence_residual, vector_field, virtual_factors, Field, Interaction, ProtocolKind};

#[cfg(test)]
pub(crate) mod testutil {
    use crate::graph::WeightedDigraph;

    pub const BALANCED5: &str = include_str!("../../../data/balanced5.edges");
    pub const UNBALANCED5: &str = include_str!("../../../data/unbalanced5.edges");

    pub const X0: [f64; 5] = [6.5, 0.2, 3.2, 1.0, 4.4];

    pub fn balanced5() -> WeightedDigraph {
        BALANCED5.parse().unwrap()
    }

    pub fn unbalanced5() -> WeightedDigraph {
        UNBALANCED5.parse().unwrap()
    }
}
