//! Trace convexity of univariate polynomials over symmetric matrices:
//! decision procedure, certificate construction, and verification.

pub mod algebra;
pub mod calculus;
pub mod certificate;
pub mod codec;
pub mod coeff;
pub mod error;
pub mod linalg;
pub mod roots;
pub mod scalar;
pub mod verify;

pub use coeff::{Coeff, Mode};
pub use error::{Error, Result};
