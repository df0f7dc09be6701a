use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("edge {index}: weight {weight} is not a positive finite number")]
    InvalidWeight { index: usize, weight: f64 },

    #[error("edge {index}: endpoint {vertex} out of range for {vertex_count} vertices")]
    EndpointOutOfRange {
        index: usize,
        vertex: usize,
        vertex_count: usize,
    },

    #[error("a graph needs at least one vertex")]
    EmptyGraph,

    #[error("root {root} out of range for {vertex_count} vertices")]
    RootOutOfRange { root: usize, vertex_count: usize },

    #[error("ball of radius {radius} exhausts the graph and s = 0: no boundary to wire to")]
    NoBoundary { radius: usize },

    #[error("graph is disconnected; spanning-tree count is zero")]
    Disconnected,

    #[error("brute-force enumeration refuses {edges} edges (limit {limit})")]
    TooManyEdges { edges: usize, limit: usize },

    #[error("matrix is not positive definite: pivot {value} at index {index}")]
    NotPositiveDefinite { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dense eigensolver limited to dimension {limit}, got {dimension}")]
    DimensionTooLarge { dimension: usize, limit: usize },

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    SolverNonConvergence { iterations: usize, residual: f64 },

    #[error("resistance did not converge by radius {radius}: last values {previous} and {last}")]
    ResistanceNonConvergence {
        radius: usize,
        previous: f64,
        last: f64,
    },

    #[error("wired resistance decreased from {previous} to {last} at radius {radius}")]
    ExhaustionNotMonotone {
        radius: usize,
        previous: f64,
        last: f64,
    },

    #[error("ball of radius {radius} gives exact return probabilities only up to k = {exact_up_to}, {requested} requested")]
    NotExact {
        radius: usize,
        exact_up_to: usize,
        requested: usize,
    },

    #[error("series extrapolation inconclusive: last two refinements differ by {difference:e} (tolerance {tolerance:e})")]
    Inconclusive { difference: f64, tolerance: f64 },

    #[error("return series of length {available} too short for s = {s}: tail bound {tail_bound:e}")]
    InsufficientTerms {
        available: usize,
        s: f64,
        tail_bound: f64,
    },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("operation requires an infinite-graph distribution; {0} is finite")]
    FiniteDistribution(String),

    #[error("radius {requested} exceeds what {family} can generate ({limit})")]
    RadiusTooLarge {
        family: String,
        requested: usize,
        limit: usize,
    },

    #[error("domination witness rejected: {0}")]
    InvalidWitness(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
