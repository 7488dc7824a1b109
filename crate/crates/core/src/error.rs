use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {d} exceeds the supported maximum of {max}")]
    DimensionTooLarge { d: usize, max: usize },

    #[error("index {index} is out of range for dimension {d} (indices are 1-based)")]
    IndexOutOfRange { index: usize, d: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("subset must be nonempty")]
    EmptySubset,

    #[error("indices must be distinct (got {0} twice)")]
    RepeatedIndex(usize),

    #[error("permutation traversal refused for d = {d} (limit {max})")]
    TooManyPermutations { d: usize, max: usize },

    #[error("game value at the empty coalition must be 0")]
    NonzeroEmptyValue,

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("negative partial variance {value} for subset {subset}")]
    NegativeVariance { subset: String, value: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("matrix is not symmetric at ({row}, {col})")]
    AsymmetricMatrix { row: usize, col: usize },

    #[error("covariance matrix is singular or not positive definite")]
    SingularCovariance,

    #[error("polynomial has zero norm")]
    ZeroPolynomial,

    #[error("moment matrix is not positive definite (condition estimate {condition:e})")]
    IndefiniteMoments { condition: f64 },

    #[error("moment matrix is ill-conditioned (condition estimate {condition:e})")]
    IllConditionedMoments { condition: f64 },

    #[error("moment for multi-index {0} is missing")]
    MissingMoment(String),

    #[error("quadrature rule needs at least one point")]
    EmptyRule,

    #[error("tensor rule with {points}^{d} nodes exceeds the evaluation limit of {limit}")]
    TooManyNodes { points: usize, d: usize, limit: u64 },

    #[error("model evaluation failed at {point:?}: {message}")]
    ModelEvaluation { point: Vec<f64>, message: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("inconsistent variance estimate: sigma^2 = {sigma2}, retained = {retained}")]
    InconsistentVariance { sigma2: f64, retained: f64 },

    #[error("Sobol indices require independent inputs")]
    DependentInputs,

    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("discrete distributions are not supported on this path; use exact enumeration")]
    DiscreteUnsupported,

    #[error("continuous distributions are not supported by exact enumeration")]
    ContinuousUnsupported,

    #[error("point {value} lies outside the support of coordinate {index}")]
    OutsideSupport { index: usize, value: f64 },

    #[error("coordinate {index} = {value} is on or outside the boundary of (-1, 1)")]
    BoundaryPoint { index: usize, value: f64 },

    #[error("elementary table has no entry for support set {0}")]
    MissingSupport(String),

    #[error("elementary table is too large: {entries} entries (limit {limit})")]
    TableTooLarge { entries: u64, limit: u64 },

    #[error("table format error: {0}")]
    TableFormat(String),

    #[error("enumeration of {outcomes} outcomes exceeds the limit of {limit}")]
    TooManyOutcomes { outcomes: u64, limit: u64 },

    #[error("parse error at line {line}, column {column}: {message} (expected one of: {expected})")]
    Parse {
        line: usize,
        column: usize,
        message: String,
        expected: String,
    },

    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),

    #[error("function '{name}' expects {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("division by zero")]
    DivisionByZero,

    #[error("expression uses '{0}', which has no exact rational evaluation")]
    NotRational(String),

    #[error("missing attribution for subset {0}")]
    MissingAttribution(String),

    #[error("zero denominator: disparity is unbounded")]
    ZeroDenominator,

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("json error: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
