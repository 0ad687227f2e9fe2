use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("exact integer overflow: {0}")]
    Overflow(String),
    #[error("budget exceeded: {what} needs {needed}, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        needed: u128,
        budget: u128,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precision error: {0}")]
    Precision(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Errors caused by resource limits rather than invalid arguments.
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            Error::Overflow(_) | Error::BudgetExceeded { .. } | Error::Precision(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
