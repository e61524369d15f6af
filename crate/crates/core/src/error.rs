use thiserror::Error;

/// Errors raised by problem setup, mesh construction and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("problem violates {condition}: {detail}")]
    ConditionViolated { condition: String, detail: String },

    #[error("N = {n_intervals} is not admissible for n = {n}: need N = 2^(n+p+1) with p >= 1")]
    InadmissibleN { n_intervals: usize, n: usize },

    #[error("epsilon must be strictly increasing and lie in (0, 1]: {0}")]
    BadEpsilon(String),

    #[error("no admissible alpha: minimum sampled row sum is {0}")]
    NoValidAlpha(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("near-singular pivot block at row {row} (condition estimate {condition:.3e})")]
    SingularPivot { row: usize, condition: f64 },

    #[error("system too large for dense check: {size} unknowns exceeds {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("expression parse error in '{input}': {reason}")]
    Parse { input: String, reason: String },

    #[error("unknown builtin problem '{0}'")]
    UnknownProblem(String),

    #[error("no closed-form solution available for problem '{0}'")]
    NoExactSolution(String),

    #[error("convergence series needs at least two values of N, each double the previous: {0}")]
    BadSeries(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),
}

pub type Result<T> = std::result::Result<T, Error>;
