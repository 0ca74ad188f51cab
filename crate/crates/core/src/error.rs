use thiserror::Error;

/// Errors raised by model construction and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid observable: {0}")]
    InvalidObservable(String),
    #[error("invalid run: {0}")]
    InvalidRun(String),
    #[error("mode mismatch: {0}")]
    ModeMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("device spaces differ (L_U = {left}, L_V = {right}); a shared state set is required")]
    DeviceSpaceMismatch { left: usize, right: usize },
    #[error("{quantity} = {observed} exceeds budget {budget}")]
    BudgetViolation {
        quantity: String,
        observed: f64,
        budget: f64,
    },
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("dimension cap exceeded: {0}")]
    DimensionCap(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("internal invariant breached: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
