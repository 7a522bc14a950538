use thiserror::Error;

/// Errors produced by the consensus toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("non-positive input {value} at index {index}")]
    NonPositiveInput { index: usize, value: f64 },

    #[error("non-positive state {value} at node {node}")]
    NonPositiveState { node: usize, value: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),

    #[error("node {0} has zero in-degree")]
    ZeroInDegree(usize),

    #[error("graph is not strongly connected")]
    NotStronglyConnected,

    #[error("graph is not balanced")]
    NotBalanced,

    #[error("graph is not connected")]
    NotConnected,

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),

    #[error("invalid degree d={d} for n={n} (need 2 <= d < n)")]
    InvalidDegree { n: usize, d: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("duplicate edge {tail} -> {head}")]
    DuplicateEdge { tail: usize, head: usize },

    #[error("non-positive weight {weight} on edge {tail} -> {head}")]
    NonPositiveWeight { tail: usize, head: usize, weight: f64 },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("unsupported metric `{0}`")]
    UnsupportedMetric(String),

    #[error("unknown protocol `{0}`")]
    UnknownProtocol(String),

    #[error("state spread {spread} leaves the sine protocol domain (-pi/2, pi/2)")]
    SineDomainViolation { spread: f64 },

    #[error("step size {dt:e} fell below the minimum {min_dt:e} at t = {t}")]
    StepUnderflow { t: f64, dt: f64, min_dt: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("not a probability vector (1-norm {0})")]
    NotProbabilityVector(f64),

    #[error("insufficient samples: have {have}, need {need}")]
    InsufficientSamples { have: usize, need: usize },

    #[error("infeasible sampling target: {0}")]
    InfeasibleTarget(String),

    #[error("bad bracket: {0}")]
    BadBracket(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_positive(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    match x.iter().position(|&v| !(v > 0.0)) {
        Some(index) => Err(Error::NonPositiveInput { index, value: x[index] }),
        None => Ok(()),
    }
}

pub(crate) fn check_positive_state(x: &[f64]) -> Result<()> {
    match x.iter().position(|&v| !(v > 0.0)) {
        Some(node) => Err(Error::NonPositiveState { node, value: x[node] }),
        None => Ok(()),
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}
