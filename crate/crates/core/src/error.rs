//! Crate-wide error type and the CLI exit-code mapping.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    /// A numeric input is outside the operation's domain (negative voltage,
    /// non-finite measurement, exponent overflow, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A constructor or operation argument violates its precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Scenario/config file failed schema validation.
    #[error("config error: {0}")]
    Config(String),

    /// The bus solver did not converge; carries the last residual in per-unit.
    #[error("solver error: {message} (last residual {residual_pu:.3e} pu)")]
    Solver { message: String, residual_pu: f64 },

    /// A source cannot be sized (or operated) to cover the requested power.
    #[error("sizing error: {0}")]
    Sizing(String),

    /// The trace never reached steady state.
    #[error("not steady: {0}")]
    NotSteady(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl SimError {
    /// Process exit code for the CLI: 3 config, 4 solver, 5 sizing, 6 I/O.
    /// Domain/argument errors are treated as configuration problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Domain(_) | SimError::Argument(_) | SimError::Config(_) => 3,
            SimError::Solver { .. } | SimError::NotSteady(_) => 4,
            SimError::Sizing(_) => 5,
            SimError::Io(_) => 6,
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
