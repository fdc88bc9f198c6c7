use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node {node} out of range for a graph with {n} types")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("edge ({u},{v}) references a node outside 0..{n}")]
    EdgeOutOfRange { u: usize, v: usize, n: usize },
    #[error("influence not subset of interaction: edge ({u},{v}) is missing from the interaction list")]
    InfluenceNotSubset { u: usize, v: usize },
    #[error("({u},{v}) is not an influence edge")]
    NotInfluenceEdge { u: usize, v: usize },
    #[error("graph must have at least one type")]
    EmptyGraph,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid mass vector: {0}")]
    InvalidMasses(String),
    #[error("mass vector has {found} entries, graph has {expected} types")]
    LengthMismatch { expected: usize, found: usize },
    #[error("not an equilibrium (fixed-point residual {residual:e})")]
    NotAnEquilibrium { residual: f64 },
    #[error(
        "equilibrium tests disagree: structural test says equilibrium but residual is {residual:e} (bound {bound:e})"
    )]
    InconsistentEquilibrium { residual: f64, bound: f64 },
    #[error("wrong topology: {0}")]
    WrongTopology(String),
    #[error("unsupported model variant: {0}")]
    UnsupportedVariant(String),
    #[error("component of size {size} exceeds the exhaustive-search cap {cap}")]
    ComponentTooLarge { size: usize, cap: usize },
    #[error("no inactive node has two or more active influence-neighbors")]
    NoQualifyingNode,
    #[error("witness precondition failed: {0}")]
    WitnessPrecondition(String),
    #[error("partition is not locally balanced: {0}")]
    PartitionNotBalanced(String),
    #[error("trajectory was recorded without flows")]
    FlowsNotRecorded,
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("row {row}: expected {expected} columns, found {found}")]
    ColumnMismatch { row: usize, expected: usize, found: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
