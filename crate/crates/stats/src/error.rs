use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },
    #[error("non-finite input `{0}`")]
    NonFinite(&'static str),
    #[error("numerical failure in {routine}: no convergence (residual {residual:e})")]
    NumericalFailure { routine: &'static str, residual: f64 },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("expected frequency {expected:.3} in cell ({row},{col}) is below 5")]
    ExpectedFrequency { row: usize, col: usize, expected: f64 },
    #[error("unbalanced design: {0}")]
    Unbalanced(String),
}

pub type Result<T> = std::result::Result<T, StatsError>;

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(StatsError::NonFinite(name))
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_nan() {
        return Err(StatsError::NonFinite(name));
    }
    if value <= 0.0 {
        return Err(StatsError::InvalidParameter { name, value, reason: "must be positive" });
    }
    Ok(())
}
