use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid mobility probabilities p={p}, q={q}: need p >= 0, q >= 0, p + q <= 1")]
    InvalidProbability { p: f64, q: f64 },

    #[error("invalid state bounds M={min}, N={max}: need M <= -1 and N >= 1")]
    InvalidBounds { min: i32, max: i32 },

    #[error("invalid discount factor {0}: need 0 < gamma < 1")]
    InvalidDiscount(f64),

    #[error("invalid transmission cost {0}: need beta >= 0")]
    InvalidCost(f64),

    #[error("state {state} outside [{min}, {max}]")]
    OutOfRange { state: i32, min: i32, max: i32 },

    #[error("no-migration is not allowed in forced-migration state {0}")]
    ForbiddenAction(i32),

    #[error("invalid thresholds ({lower}, {upper}) for state bounds [{min}, {max}]")]
    InvalidThresholds {
        lower: i32,
        upper: i32,
        min: i32,
        max: i32,
    },

    #[error("policy covers {got} states, instance has {expected}")]
    PolicyLength { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular to working precision (pivot column {column})")]
    SingularMatrix { column: usize },

    #[error("enumeration of {pairs} threshold pairs exceeds budget of {budget}")]
    TooLarge { pairs: usize, budget: usize },

    #[error("no threshold pair minimizes the value at every state")]
    NoUniformMinimizer,

    #[error("{solver} did not terminate within {limit} iterations")]
    IterationLimit { solver: &'static str, limit: usize },

    #[error("invalid tolerance {0}: must be positive and finite")]
    InvalidTolerance(f64),

    #[error("need at least {min} runs, got {got}")]
    TooFewRuns { min: usize, got: usize },

    #[error("invalid horizon: must be at least 1")]
    InvalidHorizon,
}
