use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("speed {component} changes sign near x = {x}")]
    SignViolation { component: usize, x: f64 },
    #[error("speeds {lower} and {upper} are not strictly ordered at x = {x}")]
    OrderViolation { lower: usize, upper: usize, x: f64 },
    #[error("invalid domain: {0}")]
    DomainError(String),
    #[error("value {value} outside admissible range [{lo}, {hi}]")]
    RangeError { value: f64, lo: f64, hi: f64 },
    #[error("index error: {0}")]
    IndexError(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("fixed-point iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("ill-conditioned least-squares problem (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },
    #[error("near-singular Fredholm operator (condition estimate {condition:.3e})")]
    NearSingular { condition: f64 },
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoConvergence(_)
            | Error::IllConditioned { .. }
            | Error::NearSingular { .. }
            | Error::Singular(_) => 3,
            Error::PreconditionViolation(_) => 4,
            _ => 2,
        }
    }
}
