use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: String,
        found: String,
    },
    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("row {row} is not stochastic: {reason}")]
    NotStochastic { row: usize, reason: String },
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("operation requires {0}")]
    Regime(String),
    #[error("enumeration needs {required} profiles, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("too few seeds for a trend estimate: {found} < {required}")]
    TooFewSeeds { found: usize, required: usize },
}

pub(crate) fn check_index(what: &'static str, index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { what, index, len })
    }
}
