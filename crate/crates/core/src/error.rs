use thiserror::Error;

/// Crate-wide error type.
///
/// The CLI maps `Infeasible` to exit code 1 and everything else to exit
/// code 2, so constructors should pick the variant by what the caller can
/// do about it, not by which module raised it.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The inputs are well-formed but no feasible answer exists for them.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// Malformed textual input (set files, strategy files, rationals, CSV).
    #[error("parse error: {0}")]
    Parse(String),
    /// Structurally invalid input (mismatched lengths, bad probabilities,
    /// monotonicity violations, out-of-range sizes).
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
