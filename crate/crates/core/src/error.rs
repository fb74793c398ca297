use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("degenerate gap: duplicate coordinate {0}")]
    DegenerateGap(String),
    #[error("non-positive gap at index {0}")]
    NonPositiveGap(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("weight vector is infeasible")]
    Infeasible,
    #[error("argument {0} is negative")]
    NegativeArgument(String),
    #[error("value {0} is below the range of the function")]
    BelowRange(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("level {level} out of range {min}..={max}")]
    LevelOutOfRange { level: usize, min: usize, max: usize },
    #[error("discontinuous piece at x = {0}")]
    Discontinuity(String),
    #[error("piece slope {0} is not positive")]
    NonPositiveSlope(String),
    #[error("oracle scale exceeded: n = {n}, limit {limit}")]
    OracleScaleExceeded { n: usize, limit: usize },
    #[error("no feasible candidate found by the oracle")]
    OracleNoCandidate,
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("line {line}: cannot parse {token:?}")]
    Parse { line: usize, token: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
