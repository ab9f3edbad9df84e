//! Error types shared across the crate.

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum PolarError {
    /// Invalid configuration (unsupported dimension, malformed signature, bad grid).
    #[error("configuration error: {0}")]
    Config(String),

    /// Structurally invalid input (shape mismatch, non-antisymmetric tensor, off-shell momentum).
    #[error("validation error: {0}")]
    Validation(String),

    /// Polar decomposition is undefined: the named invariant vanishes.
    #[error("singular spinor: {invariant} vanishes (flag-dipole/light-like)")]
    SingularSpinor {
        /// The bilinear invariant that vanished, e.g. `"Phi^2+Theta^2"`.
        invariant: String,
    },

    /// Internal consistency check failed (imaginary parts above tolerance,
    /// derivative decomposition does not fit the supplied sample).
    #[error("consistency error: {0}")]
    Consistency(String),

    /// Numerical failure (linear solver breakdown, step-size floor reached).
    #[error("numerical error: {0}")]
    Numerical(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, PolarError>;
