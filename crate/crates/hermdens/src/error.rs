use thiserror::Error;

/// Every failure the library can report. Variant names are stable: the CLI
/// prints them verbatim in its error reports.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("DivisionByZero")]
    DivisionByZero,
    #[error("PoleAtPoint: denominator vanishes at q = {0}")]
    PoleAtPoint(i64),
    #[error("InvalidPrime: {0} is not an odd prime")]
    InvalidPrime(u64),
    #[error("DegenerateGram: determinant is zero")]
    DegenerateGram,
    #[error("BudgetExceeded: needs {required} visits, limit {limit}")]
    BudgetExceeded { required: u128, limit: u128 },
    #[error("InvalidInvariants: {0}")]
    InvalidInvariants(String),
    #[error("InvalidProfile: {0}")]
    InvalidProfile(String),
    #[error("IndexOutOfRange: {0}")]
    IndexOutOfRange(String),
    #[error("ParityMismatch: val {val} is not congruent to h+1 = {target} mod 2")]
    ParityMismatch { val: i64, target: i64 },
    #[error("InvalidParity: {0}")]
    InvalidParity(String),
    #[error("EmptyStratum: {0}")]
    EmptyStratum(String),
    #[error("InvalidCase: {0}")]
    InvalidCase(String),
    #[error("UnsupportedKind: {0}")]
    UnsupportedKind(String),
    #[error("NotStabilized: d={d} gives {first}, d={next} gives {second}")]
    NotStabilized { d: u32, next: u32, first: String, second: String },
    #[error("PrecisionLoss: {0}")]
    PrecisionLoss(String),
    #[error("UnderdeterminedFit: {0}")]
    UnderdeterminedFit(String),
    #[error("NotHermitian: {0}")]
    NotHermitian(String),
    #[error("Parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Default cap on ring-element visits for every enumeration.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

pub(crate) fn check_budget(required: u128, limit: u128) -> Result<()> {
    if required > limit {
        Err(Error::BudgetExceeded { required, limit })
    } else {
        Ok(())
    }
}
