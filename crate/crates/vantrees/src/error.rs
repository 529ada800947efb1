use thiserror::Error;

/// Crate-wide error type.
///
/// The split matters for the CLI: `Config`, `InvalidInput`, `Misuse`,
/// `Capability` and `Io` map to exit code 1 (the request itself was bad),
/// while `ContractViolation` and `Numerical` map to exit code 2 (the request
/// was fine but a verified numerical identity or inequality failed its
/// tolerance, or the computation itself broke down).
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed arguments: empty grids, mismatched lengths, non-increasing
    /// nodes, dimensions out of range, and the like.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Structurally valid input used outside an operation's precondition,
    /// e.g. a parameter outside the declared domain or an unbounded
    /// statistic where a bounded one is required.
    #[error("misuse: {0}")]
    Misuse(String),

    /// The request is meaningful but not supported at this scale, e.g.
    /// quadrature over an intractable product sample space.
    #[error("not supported: {0}")]
    Capability(String),

    /// A numerical procedure failed to converge or produced NaN.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Configuration file problems: syntax, unknown keys, missing fields,
    /// inconsistent dimensions between blocks.
    #[error("config: {0}")]
    Config(String),

    /// A checked identity or inequality exceeded its tolerance.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn misuse(msg: impl Into<String>) -> Self {
        Error::Misuse(msg.into())
    }
}
