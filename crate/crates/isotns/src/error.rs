//! Error type shared by all engines.

use thiserror::Error;

/// Errors produced by construction, validation and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix or tensor had the wrong shape.
    #[error("shape error: {0}")]
    Shape(String),

    /// A parameter lies outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs are mutually inconsistent (wrong boundary length, overlapping
    /// supports, out-of-range qubits, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// The request exceeds a configured resource budget.
    #[error("resource error: {0}")]
    Resource(String),

    /// A program could not be exported in the requested format.
    #[error("export error: {0}")]
    Export(String),

    /// An iterative solver failed to converge.
    #[error("solver error: {0}")]
    Solver(String),

    /// An internal identity that must hold by construction failed; this
    /// signals an implementation bug, not bad user input.
    #[error("consistency error: {0}")]
    Consistency(String),

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
