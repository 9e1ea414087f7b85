use thiserror::Error;

/// Errors raised by the MARO toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaroError {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("non-finite model evaluation at {context}")]
    NonFiniteEvaluation { context: String },

    #[error("{what} = {value} outside [{lower}, {upper}]")]
    OutOfBounds {
        what: String,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid problem specification: {0}")]
    InvalidSpec(String),

    #[error("discretization would need {required} scenarios (cap {cap})")]
    DimensionTooLarge { required: usize, cap: usize },

    #[error("wrong uncertainty geometry: expected {expected}")]
    WrongGeometry { expected: &'static str },

    #[error("empty scenario set")]
    EmptyScenarioSet,

    #[error("unknown scenario id {0}")]
    UnknownScenario(usize),

    #[error("infeasible model: constraint {constraint} violated by {violation:.3e} in scenario {scenario}")]
    InfeasibleModel {
        constraint: String,
        scenario: usize,
        violation: f64,
    },

    #[error("nominal re-optimization infeasible (violation {violation:.3e})")]
    NsrInfeasible { violation: f64 },

    #[error("front machinery requires exactly two objectives, got {0}")]
    NotBiObjective(usize),

    #[error("fronts have disjoint objective-1 ranges")]
    DisjointRanges,

    #[error("empty front")]
    EmptyFront,

    #[error("missing nominal re-optimization value for front point {0}")]
    MissingNsr(usize),

    #[error("restrictions exclude the whole front")]
    InfeasibleRestrictions,

    #[error("unknown objective {0}")]
    UnknownObjective(String),

    #[error("unknown built-in model {0:?}")]
    UnknownModel(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("{path} (line {line}, column {column}): {message}")]
    Schema {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T, E = MaroError> = std::result::Result<T, E>;
