use thiserror::Error;

/// Error categories shared by every solver in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum VarqError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid system specification: {0}")]
    InvalidSpec(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("numerical failure: {message}")]
    NumericalFailure { message: String, diagnostics: Vec<(String, f64)> },

    #[error("step rejected: {reason}{}", location.map(|i| format!(" at node {i}")).unwrap_or_default())]
    StepRejected { reason: String, location: Option<usize> },

    #[error("domain escape: {0}")]
    DomainEscape(String),

    #[error("iteration diverged: {message}")]
    Diverged { message: String, iteration: usize, residual: f64 },

    #[error("maximum iterations reached ({iterations}) with residual {residual:e}")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("fit window empty: {0}")]
    FitWindowEmpty(String),
}

impl VarqError {
    pub(crate) fn numerical(message: impl Into<String>, diagnostics: Vec<(String, f64)>) -> Self {
        VarqError::NumericalFailure { message: message.into(), diagnostics }
    }

    pub(crate) fn rejected(reason: impl Into<String>, location: Option<usize>) -> Self {
        VarqError::StepRejected { reason: reason.into(), location }
    }
}

pub type Result<T> = std::result::Result<T, VarqError>;
