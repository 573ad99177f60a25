//! Crate-wide error type.

use std::fmt;

/// Everything that can go wrong across the polynomial, stability,
/// configuration, solver and perturbation layers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The iterative root finder failed after its retry schedule.
    NonConvergence(String),
    /// `deflate_factor` was asked to divide by something that is not a
    /// factor within tolerance.
    NotAFactor { remainder: f64, tolerance: f64 },
    /// A Hurwitz matrix was requested for a polynomial whose leading
    /// coefficient is not positive.
    NonPositiveLeading(f64),
    /// Root- and minor-based stability tests disagreed on a polynomial
    /// both should decide. Indicates a numerical breakdown.
    StabilityConflict(String),
    /// Configuration shorthand did not parse.
    Parse(String),
    /// A configuration violates a structural invariant.
    InvalidConfiguration(String),
    /// A coefficient that must vanish identically in a structured template
    /// did not; the template is malformed.
    OddCoefficientNonzero { degree: usize },
    /// No Newton start converged for a system.
    NoSolutions,
    /// Every candidate for a system was infeasible.
    NoFeasibleSolution,
    /// A perturbation parameter pushed the critical points out of range.
    OutOfRange(String),
    /// A produced triple failed one of the certificate predicates.
    CertificationFailed(String),
    /// Malformed numeric input (NaN/Inf coefficients, zero denominator,
    /// degenerate Möbius map, ...).
    InvalidInput(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonConvergence(msg) => write!(f, "root finder did not converge: {msg}"),
            Error::NotAFactor { remainder, tolerance } => write!(
                f,
                "not a factor: relative remainder {remainder:.3e} exceeds {tolerance:.3e}"
            ),
            Error::NonPositiveLeading(lc) => {
                write!(f, "leading coefficient {lc} must be positive")
            }
            Error::StabilityConflict(msg) => {
                write!(f, "stability tests disagree: {msg}")
            }
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::InvalidConfiguration(msg) => write!(f, "invalid configuration: {msg}"),
            Error::OddCoefficientNonzero { degree } => write!(
                f,
                "odd coefficient at degree {degree} does not vanish identically"
            ),
            Error::NoSolutions => write!(f, "no Newton start converged"),
            Error::NoFeasibleSolution => write!(f, "no feasible solution"),
            Error::OutOfRange(msg) => write!(f, "out of range: {msg}"),
            Error::CertificationFailed(msg) => write!(f, "certification failed: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
