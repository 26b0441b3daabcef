use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("potential {index} is discontinuous across the circle seam: A(0) = {at_zero}, A(1) = {at_one}")]
    SeamDiscontinuity {
        index: usize,
        at_zero: f64,
        at_one: f64,
    },

    #[error("potential {index}: segments disagree at x = {at} ({left} vs {right})")]
    InteriorDiscontinuity {
        index: usize,
        at: f64,
        left: f64,
        right: f64,
    },

    #[error("potential {index}: breakpoints must increase from 0 to 1 ({detail})")]
    Breakpoints { index: usize, detail: String },

    #[error("symbol {symbol} out of range for an alphabet of size {size}")]
    IndexOutOfRange { symbol: usize, size: usize },

    #[error("control word provides {available} symbols but {requested} were requested")]
    PrefixExhausted { available: usize, requested: usize },

    #[error("period {period} exceeds the configured cap {cap}")]
    PeriodCap { period: usize, cap: usize },

    #[error("enumeration needs {needed} evaluations, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error(
        "value iteration did not converge after {iterations} sweeps (last change {last_change:e})"
    )]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("trace does not match measure: {0}")]
    TraceMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Rejects discount factors outside the open unit interval.
pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "discount factor must lie in (0, 1), got {lambda}"
        )))
    }
}
