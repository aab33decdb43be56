//! Error types shared across the crate.
//!
//! Validation problems are structured so that front ends can report the exact
//! offending entry (state pair, coefficient power, age) without string parsing.

use thiserror::Error;

/// A single construction-time validation problem.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    /// An off-diagonal transition rate turns negative somewhere on `[0, y_cap]`.
    #[error("rate ({from},{to}) becomes negative: power-{power} coefficient {coeff} drives value {rate} at age {age}")]
    NegativeRate {
        from: usize,
        to: usize,
        power: usize,
        coeff: f64,
        age: f64,
        rate: f64,
    },
    /// A state whose exit rate vanishes at the age cap; its cumulative hazard
    /// would stay bounded and the holding time could be infinite.
    #[error("state {state} is absorbing: exit rate is zero at the age cap")]
    AbsorbingState { state: usize },
    /// A coefficient matrix row does not sum to zero, so it is not a rate matrix.
    #[error("power-{power} coefficient matrix row {row} sums to {sum}, expected 0")]
    RowSumNonzero { power: usize, row: usize, sum: f64 },
    /// Dimension mismatch in the supplied matrices or vectors.
    #[error("bad shape: {0}")]
    Shape(String),
    /// A per-state interest rate that is not strictly positive.
    #[error("interest rate for state {state} must be positive, got {value}")]
    NonPositiveRate { state: usize, value: f64 },
    /// A per-state base volatility that is not strictly positive.
    #[error("volatility for state {state} must be positive, got {value}")]
    NonPositiveVol { state: usize, value: f64 },
    /// A scalar parameter outside its admissible range.
    #[error("parameter `{name}` out of range: {value}")]
    Parameter { name: &'static str, value: f64 },
}

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// One or more validation problems found at construction.
    #[error("validation failed: {}", join(.0))]
    Validation(Vec<ValidationError>),
    /// State index outside `0..k`.
    #[error("state index {index} out of range for {count} states")]
    StateIndex { index: usize, count: usize },
    /// A bad runtime argument (unknown claim kind, non-monotone time change, ...).
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Quadrature or root finding failed to reach its tolerance.
    #[error("{what} (residual estimate {residual:.3e})")]
    Numeric { what: String, residual: f64 },
    /// Fixed-point iteration hit the iteration cap; carries the residual history.
    #[error("contraction iteration stopped after {iterations} steps at residual {last:.3e}")]
    Convergence {
        iterations: usize,
        last: f64,
        residuals: Vec<f64>,
    },
    /// The requested operation needs a model feature that is absent.
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    /// Structural bond priced from a spot already at or below its barrier.
    #[error("spot {spot} is at or below the default barrier {barrier}")]
    AlreadyDefaulted { spot: f64, barrier: f64 },
}

impl Error {
    /// Convenience constructor for single-issue validation failures.
    pub fn validation(v: ValidationError) -> Self {
        Error::Validation(vec![v])
    }
}

fn join(list: &[ValidationError]) -> String {
    list.iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
