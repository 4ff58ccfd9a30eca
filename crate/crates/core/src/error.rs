//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    // graph construction / queries
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(usize, usize),
    #[error("edge {src} -> {dst} has non-positive weight {weight}")]
    NonPositiveWeight { src: usize, dst: usize, weight: f64 },
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("attribute {attribute:?} has no category {value:?}")]
    UnknownCategory { attribute: String, value: String },
    #[error("node {node} has no value for attribute {attribute:?}")]
    MissingAttributeValue { node: usize, attribute: String },
    #[error("partition covers {partition_len} nodes but graph has {graph_len}")]
    PartitionMismatch {
        partition_len: usize,
        graph_len: usize,
    },

    // generation / transforms
    #[error("invalid generator spec: {0}")]
    InvalidGeneratorSpec(String),
    #[error(
        "homophily target for attribute {attribute:?} unreachable \
         (worst deviation {deviation:.4} after {passes} rewiring passes)"
    )]
    InfeasibleHomophily {
        attribute: String,
        passes: usize,
        deviation: f64,
    },
    #[error("irreciprocal fraction must be in [0, 1), got {0}")]
    InvalidFraction(f64),
    #[error("degree increase {requested} exceeds capacity of a {nodes}-node graph")]
    DegreeCapacity { requested: f64, nodes: usize },
    #[error("transform expects an all-reciprocal input graph")]
    NotReciprocal,
    #[error("invalid transform argument: {0}")]
    InvalidTransform(String),
    #[error(
        "giant component kept only {kept} of {total} nodes (minimum {minimum}); \
         graph too fragmented"
    )]
    ExcessiveShrinkage {
        kept: usize,
        total: usize,
        minimum: usize,
    },

    // sampling
    #[error("invalid sampling config: {0}")]
    InvalidSamplingConfig(String),
    #[error("cannot select {requested} seeds from {available} nodes")]
    NotEnoughSeeds { requested: usize, available: usize },
    #[error("no eligible seed: every candidate has degree 0")]
    NoEligibleSeed,
    #[error("chain died after {sampled} of {target} participants")]
    ChainDeath { sampled: usize, target: usize },

    // estimators
    #[error("empty sample")]
    EmptySample,
    #[error("node {0} has no outgoing edge; transition matrix undefined")]
    DanglingNode(usize),
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("stationary mass for sampled node {0} is not positive")]
    ZeroStationaryMass(usize),
    #[error("homophily undefined for group {group:?}: {reason}")]
    HomophilyUndefined { group: String, reason: String },

    // experiments
    #[error("checkpoint lists differ between replications")]
    MismatchedCheckpoints,
    #[error("no replications requested")]
    NoReplications,
    #[error("unknown grid axis {0:?}")]
    UnknownAxis(String),
    #[error("axis {axis:?} cannot take value {value:?}")]
    BadAxisValue { axis: String, value: String },

    // io / config
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
