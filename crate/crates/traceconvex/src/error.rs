//! Error types shared across the crate.

use thiserror::Error;

use crate::coeff::Coeff;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (mode mismatch, missing letters, ...).
    #[error("input error: {0}")]
    Input(String),

    /// Text that does not match the polynomial or certificate grammar.
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    /// A guard against combinatorial blowup tripped.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// An iterative numerical routine failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A matrix expected to be positive semidefinite has a negative eigenvalue.
    #[error("matrix is not positive semidefinite (eigenvalue {0})")]
    NotPsd(f64),

    /// The polynomial is negative somewhere on the real line.
    #[error("polynomial is not nonnegative on the real line (witness x0 = {witness})")]
    NotNonnegative { witness: Coeff },

    /// The polynomial is negative somewhere on the requested interval.
    #[error("polynomial is not nonnegative on the interval (witness x0 = {witness})")]
    NotNonnegativeOnInterval { witness: Coeff },

    /// The polynomial is not convex on the real line.
    #[error("polynomial is not convex (witness x0 = {witness}, second derivative negative)")]
    NotConvex { witness: Coeff },

    /// The polynomial is not convex on the requested interval.
    #[error("polynomial is not convex on the interval (witness x0 = {witness})")]
    NotConvexOnInterval { witness: Coeff },

    /// An invariant the construction guarantees was violated.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
